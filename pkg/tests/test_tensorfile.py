import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdiff.tensorfile import MAGIC, VERSION, read_tensor, write_tensor


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_round_trip_preserves_dtype_and_values(tmp_path, dtype):
    arr = np.random.default_rng(0).standard_normal((2, 3, 4, 5)).astype(dtype)
    path = tmp_path / "t.spdt"
    write_tensor(path, arr)
    back = read_tensor(path)
    assert back.dtype == np.dtype(dtype)
    assert np.array_equal(back, arr)


def test_header_layout(tmp_path):
    arr = np.arange(6, dtype=np.float64).reshape(2, 3)
    path = tmp_path / "t.spdt"
    write_tensor(path, arr)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack_from("<I", raw, 4)[0] == VERSION
    code, ndim = struct.unpack_from("<BB", raw, 8)
    assert code == 2 and ndim == 2
    assert struct.unpack_from("<2Q", raw, 10) == (2, 3)
    assert len(raw) == 4 + 4 + 2 + 16 + 6 * 8


def test_trailing_bytes_rejected(tmp_path):
    arr = np.ones((2, 2), dtype=np.float32)
    path = tmp_path / "t.spdt"
    write_tensor(path, arr)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(ValueError, match="size mismatch"):
        read_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    arr = np.ones((4, 4), dtype=np.float64)
    path = tmp_path / "t.spdt"
    write_tensor(path, arr)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="size mismatch"):
        read_tensor(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.spdt"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ValueError, match="not a SPDT"):
        read_tensor(path)


def test_bad_dtype_code_rejected(tmp_path):
    arr = np.ones((2,), dtype=np.float32)
    path = tmp_path / "t.spdt"
    write_tensor(path, arr)
    raw = bytearray(path.read_bytes())
    raw[8] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="dtype code"):
        read_tensor(path)


def test_unsupported_write_dtype(tmp_path):
    with pytest.raises(ValueError, match="unsupported dtype"):
        write_tensor(tmp_path / "t.spdt", np.ones((2,), dtype=np.int32))


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=4),
    st.sampled_from([np.float32, np.float64]),
    st.integers(min_value=0, max_value=2 ** 31 - 1),
)
def test_round_trip_property(tmp_path_factory, dims, dtype, seed):
    arr = np.random.default_rng(seed).standard_normal(tuple(dims)).astype(dtype)
    path = tmp_path_factory.mktemp("h") / "t.spdt"
    write_tensor(path, arr)
    assert np.array_equal(read_tensor(path), arr)
