"""Linear-Gaussian world model with closed-form optimal velocities.

Clean data is modeled as zero-mean Gaussian with diagonal spectral
covariance P(omega), which makes the optimal velocity a per-frequency
linear gain and every pipeline quantity exactly computable. The model
exists so the sampler, schedule and expansion math can be verified
without any trained network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import spectral
from .spectral import TransformKind
from .spectrum import PowerLaw


def velocity_error(power, t):
    """Closed-form E|v* - eps|^2 = (1-t)^2 P (1+P) / ((1-t)^2 P + t^2).

    Equals SNR(t) * (1+P) / (1+SNR(t)); this rational form is stable at
    both endpoints (t=0 gives 1+P, t=1 gives 0). Vectorized over both args.
    """
    p = np.asarray(power, dtype=np.float64)
    tt = np.asarray(t, dtype=np.float64)
    num = (1.0 - tt) ** 2 * p * (1.0 + p)
    den = (1.0 - tt) ** 2 * p + tt ** 2
    out = num / den
    return float(out) if out.ndim == 0 else out


def optimal_gain(power, t):
    """Per-frequency gain of the optimal velocity: v* = gain * x_t.

    gain = (t - (1-t) P) / ((1-t)^2 P + t^2); regular on all of [0, 1]
    for P > 0 (t=0 gives -1, t=1 gives 1).
    """
    p = np.asarray(power, dtype=np.float64)
    tt = np.asarray(t, dtype=np.float64)
    out = (tt - (1.0 - tt) * p) / ((1.0 - tt) ** 2 * p + tt ** 2)
    return float(out) if out.ndim == 0 else out


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GaussianModel:
    """Power-law Gaussian data model on a fixed full-resolution grid.

    ``dc_power`` replaces the undefined P(0); it defaults to P(1). Reduced
    scales reuse the same radial map with powers scaled by s^2, matching
    the cross-resolution coefficient identification used by embedding.
    """

    power_law: PowerLaw
    grid: tuple[int, int]
    channels: int = 1
    frames: int = 1
    kind: TransformKind = TransformKind.DCT
    dc_power: float | None = None

    def __post_init__(self):
        h, w = self.grid
        if h < 1 or w < 1:
            raise ValueError(f"grid dims must be >= 1, got {self.grid}")
        if self.channels < 1 or self.frames < 1:
            raise ValueError("channels and frames must be >= 1")
        if self.dc_power is not None and not self.dc_power > 0:
            raise ValueError("dc_power must be positive")

    @property
    def field_shape(self) -> tuple[int, int, int, int]:
        return self.channels, self.frames, self.grid[0], self.grid[1]

    def scale_of(self, field: np.ndarray) -> float:
        h, w = field.shape[-2:]
        s = h / self.grid[0]
        if abs(s - w / self.grid[1]) > 1e-12:
            raise ValueError(f"field grid {(h, w)} is not a uniform scaling of {self.grid}")
        return s

    def slot_power(self, scale: float = 1.0) -> np.ndarray:
        h = int(round(scale * self.grid[0]))
        w = int(round(scale * self.grid[1]))
        return _slot_power(self, h, w) * scale ** 2

    def to_json(self) -> str:
        rec = {
            "A": self.power_law.A,
            "beta": self.power_law.beta,
            "r_squared": self.power_law.r_squared,
            "grid": list(self.grid),
            "channels": self.channels,
            "frames": self.frames,
            "kind": self.kind.value,
            "dc_power": self.dc_power,
        }
        return json.dumps(rec, sort_keys=True, indent=2) + "\n"


@lru_cache(maxsize=64)
def _slot_power_cached(law_key, grid, kind, dc_power):
    A, beta = law_key
    law = PowerLaw(A=A, beta=beta)
    radial = spectral.geometry(kind, *grid).radial
    power = law.evaluate(radial)
    dc = dc_power if dc_power is not None else law.evaluate(1.0)
    power = np.where(radial == 0, dc, power)
    power.setflags(write=False)
    return power


def _slot_power(model: GaussianModel, h: int, w: int) -> np.ndarray:
    return _slot_power_cached(
        (model.power_law.A, model.power_law.beta), (h, w), model.kind, model.dc_power
    )


def sample_clean(model: GaussianModel, rng, batch: tuple[int, ...] = ()) -> np.ndarray:
    """Draw fields whose spectral coefficients are independent N(0, P)."""
    rng = as_rng(rng)
    shape = tuple(batch) + model.field_shape
    white = rng.standard_normal(shape)
    coeffs = spectral.forward(white, model.kind).coeffs
    coeffs = coeffs * np.sqrt(model.slot_power())
    return spectral.inverse(spectral.Spectrum(coeffs=coeffs, kind=model.kind))


def optimal_velocity(model: GaussianModel, x_t: np.ndarray, t: float) -> np.ndarray:
    """Optimal velocity for a state at time t, at any scale of the model grid."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    s = model.scale_of(x_t)
    gain = optimal_gain(model.slot_power(s), t)
    coeffs = spectral.forward(x_t, model.kind).coeffs
    return spectral.inverse(spectral.Spectrum(coeffs=gain * coeffs, kind=model.kind))


def flow_matching_loss_optimal(model: GaussianModel, t: float, scale: float = 1.0) -> float:
    """Slot-averaged analytic E|v* - eps|^2 at time t (all slots, DC included)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return float(np.mean(velocity_error(model.slot_power(scale), t)))


class OracleVelocity:
    """VelocityModel adapter: evaluates the model's optimal velocity."""

    def __init__(self, model: GaussianModel):
        self.model = model

    def __call__(self, field: np.ndarray, t: float) -> np.ndarray:
        return optimal_velocity(self.model, field, t)
