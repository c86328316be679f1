"""Spectral noise expansion and the passthrough filter.

``expand`` is the atomic resolution-transition operator: it embeds the
current state's spectrum into the next grid, fills the newly exposed slots
with level-t noise, inverse-transforms, and applies the alignment rescale
and time reindex in one step so callers never see a half-aligned state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .oracle import as_rng
from .schedule import Schedule, activation_time_for_power
from .spectral import TransformKind
from .spectrum import PowerLaw


@dataclass
class FlowState:
    """A field tagged with its current time and resolution stage."""

    field: np.ndarray
    t: float
    stage: int


def _new_band_noise(kind: TransformKind, shape, mask: np.ndarray, rng) -> np.ndarray:
    """Coefficients of transformed white noise on the masked slots.

    For the real orthonormal transforms these are plain i.i.d. normals drawn
    directly in the spectral domain; the FFT needs the Hermitian structure
    of an actual transformed field, so draw spatially and transform.
    """
    if kind is TransformKind.FFT:
        eps = rng.standard_normal(shape)
        return spectral.forward(eps, kind).coeffs[..., mask]
    return rng.standard_normal(shape[:-2] + (int(mask.sum()),))


def expand(state: FlowState, schedule: Schedule, kind: TransformKind, rng) -> FlowState:
    """Raise ``state`` to the next resolution stage of ``schedule``."""
    rng = as_rng(rng)
    if state.stage >= schedule.n_stages - 1:
        raise ValueError(f"stage {state.stage} is already the final stage")
    t_i = schedule.transitions[state.stage]
    if not math.isclose(state.t, t_i, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"state at t={state.t} but stage {state.stage} transitions at t={t_i}")
    small_grid = schedule.stage_grid(state.stage)
    if state.field.shape[-2:] != small_grid:
        raise ValueError(f"field grid {state.field.shape[-2:]} != stage grid {small_grid}")

    big_grid = schedule.stage_grid(state.stage + 1)
    spec = spectral.forward(state.field, kind)
    big = spectral.embed(spec, big_grid)
    new = ~spectral.band_mask(kind, big_grid, small_grid)
    coeffs = big.coeffs
    coeffs[..., new] = t_i * _new_band_noise(kind, state.field.shape[:-2] + big_grid, new, rng)
    out = spectral.inverse(spectral.Spectrum(coeffs=coeffs, kind=kind))
    out *= schedule.rescales[state.stage]
    return FlowState(field=out, t=schedule.aligned_times[state.stage], stage=state.stage + 1)


def passthrough_filter(
    state: FlowState,
    initial_noise: np.ndarray,
    power_law: PowerLaw,
    delta: float,
    kind: TransformKind,
) -> FlowState:
    """Replace every not-yet-activated frequency with t * T(initial noise).

    A slot is not yet activated when the current t exceeds its activation
    time t_omega (larger t = earlier in denoising). The DC slot has
    t_omega = 1 and is never replaced.
    """
    if state.field.shape != initial_noise.shape:
        raise ValueError(
            f"noise grid {initial_noise.shape} does not match state grid {state.field.shape}"
        )
    h, w = state.field.shape[-2:]
    radial = spectral.geometry(kind, h, w).radial
    t_act = activation_time_for_power(power_law.evaluate(radial), delta)
    replace = state.t > t_act
    if not replace.any():
        return FlowState(field=state.field.copy(), t=state.t, stage=state.stage)
    coeffs = spectral.forward(state.field, kind).coeffs
    noise = spectral.forward(initial_noise, kind).coeffs
    coeffs[..., replace] = state.t * noise[..., replace]
    out = spectral.inverse(spectral.Spectrum(coeffs=coeffs, kind=kind))
    return FlowState(field=out, t=state.t, stage=state.stage)
