"""Binary tensor file format: magic "SPDT", little-endian, row-major.

Layout: magic (4 bytes) | version u32 | dtype u8 (1=float32, 2=float64) |
ndim u8 | dims as u64 each | payload. Trailing bytes are rejected.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SPDT"
VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 1, np.dtype("float64"): 2}


def write_tensor(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _CODES:
        raise ValueError(f"unsupported dtype {arr.dtype}; use float32 or float64")
    code = _CODES[arr.dtype]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<BB", code, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 10 or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a SPDT tensor file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    code, ndim = struct.unpack_from("<BB", data, 8)
    if code not in _DTYPES:
        raise ValueError(f"{path}: unknown dtype code {code}")
    offset = 10
    if len(data) < offset + 8 * ndim:
        raise ValueError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += 8 * ndim
    dtype = _DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    expected = offset + count * dtype.itemsize
    if len(data) != expected:
        raise ValueError(
            f"{path}: payload size mismatch (got {len(data) - offset} bytes, expected {count * dtype.itemsize})"
        )
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return arr.reshape(dims).astype(dtype.newbyteorder("="))
