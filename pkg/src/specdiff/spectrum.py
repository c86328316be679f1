"""Radially averaged power spectra, power-law fitting, and per-frequency SNR."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .spectral import TransformKind, forward, geometry

POWER_FLOOR = 1e-12


@dataclass(frozen=True)
class PowerLaw:
    """Fitted spectral power law P(omega) = A * omega**(-beta)."""

    A: float
    beta: float
    r_squared: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"power-law amplitude must be positive, got A={self.A}")

    def evaluate(self, omega) -> np.ndarray | float:
        """Evaluate the law; clamped below at 1e-12. omega=0 maps to +inf.

        Negative frequencies are rejected; the scheduling formulas are only
        defined for omega > 0 and the DC slot is handled by its consumers.
        """
        om = np.asarray(omega, dtype=np.float64)
        if np.any(om < 0):
            raise ValueError("omega must be >= 0")
        with np.errstate(divide="ignore"):
            p = self.A * om ** (-self.beta)
        p = np.maximum(p, POWER_FLOOR)
        return float(p) if np.isscalar(omega) else p

    __call__ = evaluate


@dataclass(frozen=True)
class RadialSpectrum:
    """Unit-width radial bins of mean coefficient power.

    ``counts`` holds the number of coefficient slots per bin; the stored
    power of each bin is additionally averaged over samples, channels and
    frames. Bin 0 (center 0.0) is the DC bin and is excluded from fits.
    """

    centers: np.ndarray
    powers: np.ndarray
    counts: np.ndarray
    grid: tuple[int, int]
    kind: TransformKind
    n_samples: int

    def __post_init__(self):
        if not np.all(np.diff(self.centers) > 0):
            raise ValueError("bin centers must be strictly increasing")
        if np.any(self.counts <= 0):
            raise ValueError("bin counts must be positive")
        if np.any(self.powers < 0):
            raise ValueError("bin powers must be non-negative")


def radial_bin_index(radial: np.ndarray) -> np.ndarray:
    """Unit-width bins [k - 0.5, k + 0.5) centered on integers."""
    return np.floor(radial + 0.5).astype(np.int64)


def estimate_radial_spectrum(batch, kind: TransformKind) -> RadialSpectrum:
    """Center each sample per channel/frame, transform, and radially average.

    ``batch`` is a sequence of fields (or a stacked array) whose first axis
    indexes samples and whose last two axes are spatial; any axes in between
    (channels, frames) are averaged over.
    """
    if isinstance(batch, np.ndarray):
        stack = np.asarray(batch, dtype=np.float64)
        if stack.ndim < 3:
            raise ValueError("batch array must be at least 3-d (samples, ..., h, w)")
    else:
        fields = [np.asarray(f, dtype=np.float64) for f in batch]
        if not fields:
            raise ValueError("empty batch")
        if any(f.shape != fields[0].shape for f in fields):
            raise ValueError("all fields in the batch must share the same shape")
        stack = np.stack(fields)
    n_samples = stack.shape[0]
    h, w = stack.shape[-2:]
    stack = stack - stack.mean(axis=(-2, -1), keepdims=True)
    coeffs = forward(stack, kind).coeffs
    mean_power = np.abs(coeffs) ** 2
    mean_power = mean_power.reshape(-1, h, w).mean(axis=0)

    radial = geometry(kind, h, w).radial
    idx = radial_bin_index(radial).ravel()
    counts = np.bincount(idx)
    sums = np.bincount(idx, weights=mean_power.ravel())
    present = np.nonzero(counts > 0)[0]
    return RadialSpectrum(
        centers=present.astype(np.float64),
        powers=sums[present] / counts[present],
        counts=counts[present],
        grid=(h, w),
        kind=kind,
        n_samples=n_samples,
    )


def fit_power_law(
    spec: RadialSpectrum,
    omega_min: float | None = None,
    omega_max: float | None = None,
    weight_by_count: bool = False,
) -> PowerLaw:
    """Least squares on (log omega, log power) over the non-DC bins.

    The optional window restricts the fit to omega_min <= omega <= omega_max.
    With ``weight_by_count`` each bin is weighted by its slot count.
    """
    sel = spec.centers > 0
    if omega_min is not None:
        sel &= spec.centers >= omega_min
    if omega_max is not None:
        sel &= spec.centers <= omega_max
    centers = spec.centers[sel]
    powers = spec.powers[sel]
    if centers.size < 2:
        raise ValueError("need at least two non-DC bins to fit a power law")
    if np.any(powers <= 0):
        bad = centers[powers <= 0]
        raise ValueError(f"non-positive power in fit range at omega={bad.tolist()}")

    x = np.log(centers)
    y = np.log(powers)
    wts = spec.counts[sel].astype(np.float64) if weight_by_count else np.ones_like(x)
    wsum = wts.sum()
    xb = (wts * x).sum() / wsum
    yb = (wts * y).sum() / wsum
    sxx = (wts * (x - xb) ** 2).sum()
    sxy = (wts * (x - xb) * (y - yb)).sum()
    slope = sxy / sxx
    intercept = yb - slope * xb
    resid = y - (intercept + slope * x)
    ss_res = (wts * resid ** 2).sum()
    ss_tot = (wts * (y - yb) ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return PowerLaw(A=float(np.exp(intercept)), beta=float(-slope), r_squared=float(r2))


def snr(power_law: PowerLaw, omega: float, t: float) -> float:
    """Per-frequency signal-to-noise ratio ((1-t)^2 / t^2) * P(omega)."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return (1.0 - t) ** 2 / t ** 2 * power_law.evaluate(omega)


def radial_spectrum_to_csv(spec: RadialSpectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "power", "count"])
        for c, p, n in zip(spec.centers, spec.powers, spec.counts):
            writer.writerow([f"{c:.1f}", f"{p:.17g}", int(n)])


def power_law_record(pl: PowerLaw, grid: tuple[int, int] | None = None,
                     kind: TransformKind | None = None) -> str:
    rec = {"A": pl.A, "beta": pl.beta, "r_squared": pl.r_squared}
    if grid is not None:
        rec["grid"] = [int(grid[0]), int(grid[1])]
    if kind is not None:
        rec["kind"] = kind.value
    return json.dumps(rec, sort_keys=True, indent=2) + "\n"


def load_power_law(path) -> tuple[PowerLaw, dict]:
    with open(path) as fh:
        rec = json.load(fh)
    pl = PowerLaw(A=float(rec["A"]), beta=float(rec["beta"]),
                  r_squared=float(rec.get("r_squared", 1.0)))
    return pl, rec
