"""Stage-wise fine-tuning targets and a toy trainable velocity model.

A training sample for stage i is built from a clean full-resolution field:
the stage input endpoint is the noise-expanded, alignment-rescaled state at
the stage's aligned start time (new spectral slots filled with the previous
transition level times the transformed stage noise), the other endpoint is
the standard flow state at the next transition time with the same noise
realization, and the target velocity is the straight-line slope between
them. The training point sits on that straight path at the sampled t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .oracle import as_rng
from .schedule import Schedule
from .spectral import TransformKind


@dataclass
class StageSample:
    input: np.ndarray
    t: float
    target: np.ndarray
    stage: int


def stage_of(schedule: Schedule, t: float) -> int:
    """Stage index i with t in (t_i, t_{i-1}] over the raw transition times."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    for i, tk in enumerate(schedule.transitions):
        if t > tk:
            return i
    return schedule.n_stages - 1


def _downscale_clean(x0_spec: spectral.Spectrum, schedule: Schedule, stage: int) -> np.ndarray:
    """Clean field at a stage's scale: extracted band times the scale factor."""
    s = schedule.scales[stage]
    if s == 1.0:
        return spectral.inverse(x0_spec)
    low = spectral.extract(x0_spec, schedule.stage_grid(stage))
    return spectral.inverse(spectral.Spectrum(coeffs=low.coeffs * s, kind=low.kind))


def make_stage_sample(
    x0: np.ndarray,
    t: float,
    schedule: Schedule,
    kind: TransformKind,
    rng,
) -> StageSample:
    """Build (x_t, v) for the stage containing t from a clean field x0."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie strictly inside (0, 1), got {t}")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape[-2:] != schedule.full_grid:
        raise ValueError(f"x0 grid {x0.shape[-2:]} != schedule grid {schedule.full_grid}")
    rng = as_rng(rng)
    i = stage_of(schedule, t)
    t_lo, _, t_up_aligned = schedule.stage_bounds(i)
    grid_i = schedule.stage_grid(i)

    x0_spec = spectral.forward(x0, kind)
    x0_i = _downscale_clean(x0_spec, schedule, i)
    eps_i = rng.standard_normal(x0.shape[:-2] + grid_i)

    if i == 0:
        # No earlier stage: the formal aligned start is t=1 with pure noise.
        stage_input_hi = eps_i
    else:
        t_prev = schedule.transitions[i - 1]
        kappa_prev = schedule.rescales[i - 1]
        grid_prev = schedule.stage_grid(i - 1)
        eps_spec = spectral.forward(eps_i, kind)
        eps_prev = spectral.inverse(spectral.extract(eps_spec, grid_prev))
        x0_prev = _downscale_clean(x0_spec, schedule, i - 1)
        y = (1.0 - t_prev) * x0_prev + t_prev * eps_prev
        big = spectral.embed(spectral.forward(y, kind), grid_i)
        new = ~spectral.band_mask(kind, grid_i, grid_prev)
        coeffs = big.coeffs
        coeffs[..., new] = t_prev * eps_spec.coeffs[..., new]
        stage_input_hi = kappa_prev * spectral.inverse(spectral.Spectrum(coeffs=coeffs, kind=kind))

    endpoint = (1.0 - t_lo) * x0_i + t_lo * eps_i
    span = t_up_aligned - t_lo
    if span <= 0:
        raise ValueError(f"degenerate stage interval: aligned start {t_up_aligned} <= end {t_lo}")
    target = (stage_input_hi - endpoint) / span
    x_t = endpoint + (t - t_lo) * target
    return StageSample(input=x_t, t=t, target=target, stage=i)


class ToyNet:
    """Per-frequency diagonal gain predictor with binned time embedding.

    One gain array per (stage, time bin); prediction applies the gain in
    the spectral domain and transforms back. This is the same functional
    class as the analytic optimal velocity, so training has a closed-form
    optimum to converge to.
    """

    def __init__(self, schedule: Schedule, kind: TransformKind, n_time_bins: int = 8):
        if n_time_bins < 1:
            raise ValueError("need at least one time bin")
        self.schedule = schedule
        self.kind = kind
        self.n_time_bins = n_time_bins
        self.gains = [
            np.zeros((n_time_bins,) + schedule.stage_grid(i))
            for i in range(schedule.n_stages)
        ]
        self.loss_history: list[float] = []

    def locate(self, grid: tuple[int, int], t: float) -> tuple[int, int]:
        for i in range(self.schedule.n_stages):
            if self.schedule.stage_grid(i) == tuple(grid):
                t_lo, t_up, _ = self.schedule.stage_bounds(i)
                frac = (t - t_lo) / (t_up - t_lo)
                b = min(self.n_time_bins - 1, max(0, int(frac * self.n_time_bins)))
                return i, b
        raise ValueError(f"grid {grid} matches no stage of the schedule")

    def __call__(self, field: np.ndarray, t: float) -> np.ndarray:
        i, b = self.locate(field.shape[-2:], t)
        coeffs = spectral.forward(field, self.kind).coeffs
        return spectral.inverse(spectral.Spectrum(coeffs=self.gains[i][b] * coeffs, kind=self.kind))


def train_toy(
    model: ToyNet,
    data_sampler,
    schedule: Schedule,
    steps: int,
    lr: float,
    rng,
    time_dist=None,
    noise_seed: int | None = None,
) -> ToyNet:
    """Gradient descent on the stage-target MSE in the spectral domain.

    ``data_sampler(rng)`` yields a batch of clean full-resolution fields
    (leading batch axes allowed); ``time_dist(rng)`` draws the training t
    (uniform on (0, 1) by default). By Parseval the spatial MSE equals the
    per-slot spectral MSE, so each slot's gain sees an independent
    quadratic problem. ``noise_seed`` pins the stage-sample noise to one
    realization per step, which together with a fixed data batch and a
    fixed t makes the optimization a deterministic quadratic descent.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    rng = as_rng(rng)
    kind = model.kind
    for _ in range(steps):
        x0 = data_sampler(rng)
        t = float(time_dist(rng)) if time_dist is not None else float(rng.uniform(1e-6, 1.0 - 1e-6))
        sample_rng = rng if noise_seed is None else np.random.default_rng(noise_seed)
        sample = make_stage_sample(x0, t, schedule, kind, sample_rng)
        i, b = model.locate(sample.input.shape[-2:], sample.t)
        xi = spectral.forward(sample.input, kind).coeffs
        vi = spectral.forward(sample.target, kind).coeffs
        g = model.gains[i][b]
        resid = g * xi - vi
        with np.errstate(over="ignore", invalid="ignore"):
            loss = float(np.mean(np.abs(resid) ** 2))
        if not np.isfinite(loss):
            raise ValueError(f"training diverged: loss is not finite at step {len(model.loss_history)}")
        model.loss_history.append(loss)
        lead_axes = tuple(range(resid.ndim - 2))
        grad = 2.0 * np.mean((resid * np.conj(xi)).real, axis=lead_axes)
        model.gains[i][b] = g - lr * grad
    return model


def analytic_stage_gain(slot_power: np.ndarray, schedule: Schedule, stage: int, t: float) -> np.ndarray:
    """Closed-form optimum of the diagonal-gain regression at time t.

    ``slot_power`` is the clean-signal power per slot at the stage's own
    scale. Shared-band slots reduce to the plain optimal-velocity gain; the
    newly exposed band of stage i > 0 carries a reduced clean component.
    """
    t_lo, _, t_up_aligned = schedule.stage_bounds(stage)
    span = t_up_aligned - t_lo
    c = np.full(slot_power.shape, (1.0 - t_lo) / span)
    if stage > 0:
        prev = spectral.band_mask(schedule.kind, schedule.stage_grid(stage), schedule.stage_grid(stage - 1))
        c[prev] = 1.0
    # x_t = a*x0 + t*eps with a = (1 - t_lo) - (t - t_lo) * c;  v = eps - c*x0
    a = (1.0 - t_lo) - (t - t_lo) * c
    cov = t - a * c * slot_power
    var = a ** 2 * slot_power + t ** 2
    return cov / var
