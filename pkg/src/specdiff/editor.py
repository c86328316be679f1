"""Frequency-based editing: re-noise the low band of an input field, expand,
and resume progressive denoising from the chosen transition.

The default blends the extracted low band to the transition's noise level
before expanding; ``noise_low_band=False`` keeps the clean low band (the
more literal re-synthesis reading, useful for consistency checks).
A spatial-domain baseline that corrupts the whole field at the same level
is included for comparison runs.
"""

from __future__ import annotations

import numpy as np

from . import sampler, spectral
from .expansion import FlowState, expand
from .oracle import as_rng
from .schedule import Schedule
from .spectral import TransformKind


def _check_k(schedule: Schedule, k: int) -> int:
    if not 1 <= k <= schedule.n_stages - 1:
        raise ValueError(
            f"transition index k must lie in [1, {schedule.n_stages - 1}], got {k}"
        )
    return k - 1  # 0-based stage whose transition we enter at


def edit_bookkeeping(schedule: Schedule, k: int) -> dict:
    """Step/time accounting of an edit entering at transition k.

    The edit runs exactly the solver steps after the snapped transition, so
    the skipped span of the base trajectory is 1 - t_k.
    """
    j = _check_k(schedule, k)
    t_k = schedule.transitions[j]
    idx = schedule.snap_indices[j]
    n = schedule.solver.n_steps
    return {
        "t_k": t_k,
        "steps_used": n - idx,
        "steps_total": n,
        "denoised_span": t_k,
        "skipped_span": 1.0 - t_k,
    }


def edit(
    input_field: np.ndarray,
    schedule: Schedule,
    k: int,
    model,
    kind: TransformKind,
    rng,
    noise_low_band: bool = True,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Edit a full-resolution field by re-noising from transition k.

    ``noise_scale`` scales the injected noise (0 gives the deterministic
    re-synthesis path used by the oracle consistency tests).
    """
    rng = as_rng(rng)
    j = _check_k(schedule, k)
    input_field = np.asarray(input_field, dtype=np.float64)
    if input_field.shape[-2:] != schedule.full_grid:
        raise ValueError(
            f"input grid {input_field.shape[-2:]} != schedule grid {schedule.full_grid}"
        )

    t_k = schedule.transitions[j]
    s_k = schedule.scales[j]
    grid_k = schedule.stage_grid(j)

    low = spectral.extract(spectral.forward(input_field, kind), grid_k)
    x0_k = spectral.inverse(spectral.Spectrum(coeffs=low.coeffs * s_k, kind=kind))
    if noise_low_band:
        eps = noise_scale * rng.standard_normal(x0_k.shape)
        y = (1.0 - t_k) * x0_k + t_k * eps
    else:
        y = x0_k

    state = expand(FlowState(field=y, t=t_k, stage=j), schedule, kind, rng)
    if noise_scale == 0.0:
        # deterministic path: strip the freshly injected new-band noise
        spec = spectral.forward(state.field, kind)
        keep = spectral.band_mask(kind, state.field.shape[-2:], grid_k)
        coeffs = np.where(keep, spec.coeffs, 0.0)
        state = FlowState(
            field=spectral.inverse(spectral.Spectrum(coeffs=coeffs, kind=kind)),
            t=state.t,
            stage=state.stage,
        )

    traj = sampler.Trajectory(seed=None, schedule=schedule)
    traj.record(t_k, state.t, state.stage, state.field)
    traj = sampler._run_stages(model, state, schedule, schedule.solver, kind, rng, traj)
    return traj.final


def sdedit_baseline(
    input_field: np.ndarray,
    schedule: Schedule,
    k: int,
    model,
    rng,
) -> np.ndarray:
    """Spatial-domain comparison: corrupt the whole field to level t_k and
    denoise at full resolution over the same remaining solver steps."""
    rng = as_rng(rng)
    j = _check_k(schedule, k)
    input_field = np.asarray(input_field, dtype=np.float64)
    t_k = schedule.transitions[j]
    idx = schedule.snap_indices[j]
    x = (1.0 - t_k) * input_field + t_k * rng.standard_normal(input_field.shape)
    times = schedule.solver.times[idx:]
    traj = sampler.Trajectory(seed=None)
    traj.record(t_k, t_k, schedule.n_stages - 1, x)
    x = sampler._euler_leg(model, x, times, times, schedule.n_stages - 1, traj)
    return x
