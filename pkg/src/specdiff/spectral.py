"""Orthonormal 2D spectral transforms and cross-resolution spectrum embedding.

Three transform families are supported, each as an orthonormal (Parseval)
forward/inverse pair acting on the last two axes of a real field:

* DCT   -- type-II DCT with orthonormal scaling; low frequencies in the
           low-index corner, so embedding a small spectrum is a corner copy.
* DWT   -- Haar wavelets with 1/sqrt(2) filters in multiresolution layout
           (approximation band at the top-left corner); the decomposition
           depth is the largest L with both dims divisible by 2**L, which
           makes small-grid spectra coincide with the approximation block
           of larger power-of-two grids.
* FFT   -- centered (DC at grid center) with symmetric 1/sqrt(hw) scaling;
           embedding copies the centered rectangle and splits boundary
           (Nyquist) rows/cols across their mirror slots so the result
           stays Hermitian and the inverse stays real.

All work is done in float64 (complex128 for FFT).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

_SQRT1_2 = np.sqrt(0.5)


class TransformKind(enum.Enum):
    DCT = "dct"
    DWT = "dwt"
    FFT = "fft"

    @classmethod
    def parse(cls, name: str) -> "TransformKind":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown transform kind: {name!r} (expected dct, dwt or fft)") from None


@dataclass(frozen=True)
class Spectrum:
    """Spectral coefficients of a field under one transform kind.

    ``coeffs`` has the same leading axes as the field it came from; the last
    two axes are the coefficient grid. Real for DCT/DWT, complex for FFT.
    """

    coeffs: np.ndarray
    kind: TransformKind

    @property
    def grid(self) -> tuple[int, int]:
        return self.coeffs.shape[-2], self.coeffs.shape[-1]


@dataclass(frozen=True)
class FrequencyGeometry:
    """Radial frequency of every coefficient slot of an (h, w) grid.

    ``radial[i, j]`` is the l2 norm of the per-axis integer frequency
    indices (DCT/DWT layout indices; centered offsets for FFT). ``nyquist``
    is the radius of the fully representable disk, min(h, w) / 2.
    """

    h: int
    w: int
    kind: TransformKind
    radial: np.ndarray

    @property
    def nyquist(self) -> float:
        return min(self.h, self.w) / 2.0

    @property
    def dc_index(self) -> tuple[int, int]:
        if self.kind is TransformKind.FFT:
            return self.h // 2, self.w // 2
        return 0, 0


@lru_cache(maxsize=128)
def geometry(kind: TransformKind, h: int, w: int) -> FrequencyGeometry:
    if h < 1 or w < 1:
        raise ValueError(f"grid dims must be >= 1, got {(h, w)}")
    if kind is TransformKind.FFT:
        fy = np.arange(h, dtype=np.float64) - h // 2
        fx = np.arange(w, dtype=np.float64) - w // 2
    else:
        fy = np.arange(h, dtype=np.float64)
        fx = np.arange(w, dtype=np.float64)
    radial = np.hypot(fy[:, None], fx[None, :])
    radial.setflags(write=False)
    return FrequencyGeometry(h=h, w=w, kind=kind, radial=radial)


def radial_frequency(geom: FrequencyGeometry, index: tuple[int, int]) -> float:
    i, j = index
    if not (0 <= i < geom.h and 0 <= j < geom.w):
        raise ValueError(f"index {index} out of range for {geom.h}x{geom.w} grid")
    return float(geom.radial[i, j])


def scale_band_limit(kind: TransformKind, full_grid: tuple[int, int], s: float) -> float:
    """Largest radial frequency carried by the scale-``s`` band of a grid.

    In DCT/DWT layout index units a (sH, sW) grid occupies the corner block
    with indices up to s*min(H, W); for the centered FFT the band caps at
    s*min(H, W)/2. Both equal s*min(H, W)/2 in physical cycle units (a DCT
    index counts half-cycles).
    """
    h, w = full_grid
    if kind is TransformKind.FFT:
        return s * min(h, w) / 2.0
    return s * float(min(h, w))


def _check_field(field: np.ndarray) -> np.ndarray:
    field = np.asarray(field, dtype=np.float64)
    if field.ndim < 2:
        raise ValueError("field must have at least two (spatial) axes")
    h, w = field.shape[-2:]
    if h < 1 or w < 1:
        raise ValueError(f"spatial dims must be >= 1, got {(h, w)}")
    return field


def dwt_levels(h: int, w: int) -> int:
    """Decomposition depth: the largest L with 2**L dividing both dims."""
    def v2(n: int) -> int:
        k = 0
        while n % 2 == 0 and n > 1:
            n //= 2
            k += 1
        return k

    levels = min(v2(h), v2(w))
    if levels == 0:
        raise ValueError(f"DWT needs even spatial dims, got {(h, w)}")
    return levels


def _haar_fwd_axis(x: np.ndarray, axis: int) -> np.ndarray:
    ev = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
    od = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
    return np.concatenate(((ev + od) * _SQRT1_2, (ev - od) * _SQRT1_2), axis=axis)


def _haar_inv_axis(c: np.ndarray, axis: int) -> np.ndarray:
    n = c.shape[axis]
    a = np.take(c, np.arange(0, n // 2), axis=axis)
    d = np.take(c, np.arange(n // 2, n), axis=axis)
    out = np.empty_like(c)
    sl_ev = [slice(None)] * c.ndim
    sl_od = [slice(None)] * c.ndim
    sl_ev[axis] = slice(0, None, 2)
    sl_od[axis] = slice(1, None, 2)
    out[tuple(sl_ev)] = (a + d) * _SQRT1_2
    out[tuple(sl_od)] = (a - d) * _SQRT1_2
    return out


def _haar_forward(field: np.ndarray, levels: int) -> np.ndarray:
    out = field.copy()
    h, w = out.shape[-2:]
    for _ in range(levels):
        block = out[..., :h, :w]
        block = _haar_fwd_axis(block, -2)
        block = _haar_fwd_axis(block, -1)
        out[..., :h, :w] = block
        h //= 2
        w //= 2
    return out


def _haar_inverse(coeffs: np.ndarray, levels: int) -> np.ndarray:
    out = coeffs.copy()
    h, w = out.shape[-2:]
    sizes = [(h >> k, w >> k) for k in range(levels)]
    for bh, bw in reversed(sizes):
        block = out[..., :bh, :bw]
        block = _haar_inv_axis(block, -1)
        block = _haar_inv_axis(block, -2)
        out[..., :bh, :bw] = block
    return out


def forward(field: np.ndarray, kind: TransformKind) -> Spectrum:
    """Orthonormal forward transform of the last two axes."""
    field = _check_field(field)
    if kind is TransformKind.DCT:
        coeffs = scipy.fft.dctn(field, type=2, norm="ortho", axes=(-2, -1))
    elif kind is TransformKind.DWT:
        levels = dwt_levels(*field.shape[-2:])
        coeffs = _haar_forward(field, levels)
    elif kind is TransformKind.FFT:
        coeffs = np.fft.fftshift(np.fft.fft2(field, norm="ortho", axes=(-2, -1)), axes=(-2, -1))
    else:  # pragma: no cover
        raise ValueError(f"unknown kind {kind}")
    return Spectrum(coeffs=coeffs, kind=kind)


def inverse(spec: Spectrum) -> np.ndarray:
    """Inverse transform back to a real spatial field."""
    coeffs = spec.coeffs
    if spec.kind is TransformKind.DCT:
        return scipy.fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho", axes=(-2, -1))
    if spec.kind is TransformKind.DWT:
        levels = dwt_levels(*coeffs.shape[-2:])
        return _haar_inverse(np.asarray(coeffs, dtype=np.float64), levels)
    if spec.kind is TransformKind.FFT:
        field = np.fft.ifft2(np.fft.ifftshift(coeffs, axes=(-2, -1)), norm="ortho", axes=(-2, -1))
        scale = max(1.0, float(np.max(np.abs(coeffs))) if coeffs.size else 1.0)
        if float(np.max(np.abs(field.imag), initial=0.0)) > 1e-8 * scale:
            raise ValueError("FFT spectrum is not Hermitian-symmetric; inverse would be complex")
        return np.ascontiguousarray(field.real)
    raise ValueError(f"unknown kind {spec.kind}")  # pragma: no cover


def _check_nesting(small: tuple[int, int], big: tuple[int, int], kind: TransformKind) -> None:
    h, w = small
    hh, ww = big
    if not (hh > h and ww > w):
        raise ValueError(f"target grid {big} must be strictly larger than {small} in both dims")
    if hh * w != ww * h:
        raise ValueError(f"aspect-ratio mismatch: {small} does not nest into {big}")
    if kind is TransformKind.DWT:
        if hh % h != 0 or (hh // h) & (hh // h - 1) != 0:
            raise ValueError(f"DWT embedding needs a power-of-two scale ratio, got {small} -> {big}")


@lru_cache(maxsize=128)
def _fft_embed_plan(small: tuple[int, int], big: tuple[int, int]):
    """Index bookkeeping for centered-rectangle FFT embedding.

    The embedding is separable: along an even axis of length n the small
    grid's Nyquist coefficient (frequency -n/2) is split in equal halves
    between the big grid's -n/2 and +n/2 slots, so the corner coefficient
    scatters to four slots with weight 1/4. This keeps valid (Hermitian)
    spectra Hermitian, and extraction folds the split slots back, making
    embed/extract an exact inverse pair on the shared band.
    """
    h, w = small
    hh, ww = big
    r0 = hh // 2 - h // 2
    c0 = ww // 2 - w // 2
    wy = np.ones(h)
    wx = np.ones(w)
    if h % 2 == 0:
        wy[0] = 0.5
    if w % 2 == 0:
        wx[0] = 0.5
    weights = wy[:, None] * wx[None, :]
    weights.setflags(write=False)
    # big-grid slots of the +h/2 / +w/2 aliases of the small Nyquist line
    row_alias = r0 + h if h % 2 == 0 else None
    col_alias = c0 + w if w % 2 == 0 else None
    return r0, c0, weights, wx, wy, row_alias, col_alias


def embed(low: Spectrum, target_grid: tuple[int, int]) -> Spectrum:
    """Embed a small-grid spectrum into the low band of a larger grid."""
    h, w = low.grid
    hh, ww = int(target_grid[0]), int(target_grid[1])
    _check_nesting((h, w), (hh, ww), low.kind)
    shape = low.coeffs.shape[:-2] + (hh, ww)
    if low.kind is TransformKind.FFT:
        out = np.zeros(shape, dtype=np.complex128)
        r0, c0, weights, wx, wy, row_alias, col_alias = _fft_embed_plan((h, w), (hh, ww))
        out[..., r0:r0 + h, c0:c0 + w] = low.coeffs * weights
        if row_alias is not None:
            out[..., row_alias, c0:c0 + w] = 0.5 * low.coeffs[..., 0, :] * wx
        if col_alias is not None:
            out[..., r0:r0 + h, col_alias] = 0.5 * low.coeffs[..., :, 0] * wy
        if row_alias is not None and col_alias is not None:
            out[..., row_alias, col_alias] = 0.25 * low.coeffs[..., 0, 0]
    else:
        out = np.zeros(shape, dtype=np.float64)
        out[..., :h, :w] = low.coeffs
    return Spectrum(coeffs=out, kind=low.kind)


def extract(spec: Spectrum, target_grid: tuple[int, int]) -> Spectrum:
    """Extract the low band of a spectrum onto a strictly smaller grid."""
    hh, ww = spec.grid
    h, w = int(target_grid[0]), int(target_grid[1])
    _check_nesting((h, w), (hh, ww), spec.kind)
    if spec.kind is TransformKind.FFT:
        r0, c0, weights, wx, wy, row_alias, col_alias = _fft_embed_plan((h, w), (hh, ww))
        block = spec.coeffs[..., r0:r0 + h, c0:c0 + w].copy()
        if row_alias is not None:
            block[..., 0, :] += spec.coeffs[..., row_alias, c0:c0 + w]
        if col_alias is not None:
            block[..., :, 0] += spec.coeffs[..., r0:r0 + h, col_alias]
        if row_alias is not None and col_alias is not None:
            block[..., 0, 0] += spec.coeffs[..., row_alias, col_alias]
        return Spectrum(coeffs=block, kind=spec.kind)
    return Spectrum(coeffs=spec.coeffs[..., :h, :w].copy(), kind=spec.kind)


@lru_cache(maxsize=128)
def band_mask(kind: TransformKind, big: tuple[int, int], small: tuple[int, int]) -> np.ndarray:
    """Boolean (H, W) mask of the slots carrying scale-``small`` content."""
    _check_nesting(small, big, kind)
    h, w = small
    hh, ww = big
    mask = np.zeros((hh, ww), dtype=bool)
    if kind is TransformKind.FFT:
        r0, c0, _, _, _, row_alias, col_alias = _fft_embed_plan((h, w), (hh, ww))
        mask[r0:r0 + h, c0:c0 + w] = True
        if row_alias is not None:
            mask[row_alias, c0:c0 + w] = True
            if col_alias is not None:
                mask[row_alias, col_alias] = True
        if col_alias is not None:
            mask[r0:r0 + h, col_alias] = True
    else:
        mask[:h, :w] = True
    mask.setflags(write=False)
    return mask
