"""Probability-flow ODE integration: single-resolution baseline, the
progressive multi-stage loop, and the passthrough experiment driver.

All integration is explicit Euler over a solver grid. After a resolution
transition the remaining solver times are rebuilt in the same shift family,
running from the aligned restart time down to the next transition (or 0),
so the per-stage step counts equal the snapped split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import expansion
from .oracle import as_rng
from .schedule import Schedule, SolverGrid
from .spectral import TransformKind
from .spectrum import PowerLaw

VelocityFn = Callable[[np.ndarray, float], np.ndarray]


class VelocityModel(Protocol):
    def __call__(self, field: np.ndarray, t: float) -> np.ndarray: ...


@dataclass
class Trajectory:
    """Recorded run of one sampling trajectory.

    ``times`` is the monotone base-grid progress axis; ``model_times`` holds
    the actual (possibly alignment-shifted) times the velocity model was
    queried at, which jump upward at transitions.
    """

    times: list[float] = field(default_factory=list)
    model_times: list[float] = field(default_factory=list)
    stages: list[int] = field(default_factory=list)
    means: list[float] = field(default_factory=list)
    variances: list[float] = field(default_factory=list)
    final: np.ndarray | None = None
    seed: object = None
    schedule: Schedule | None = None

    def record(self, base_t: float, model_t: float, stage: int, x: np.ndarray) -> None:
        self.times.append(float(base_t))
        self.model_times.append(float(model_t))
        self.stages.append(int(stage))
        self.means.append(float(x.mean()))
        self.variances.append(float(x.var()))


def _check_velocity(v: np.ndarray, stage: int, step: int) -> None:
    if not np.isfinite(v).all():
        vmax = float(np.nanmax(np.abs(v)))
        raise ValueError(
            f"velocity produced non-finite values at stage {stage}, step {step} (max |v| = {vmax:g})"
        )


def _euler_leg(
    model: VelocityFn,
    x: np.ndarray,
    leg_times: np.ndarray,
    base_times: np.ndarray,
    stage: int,
    traj: Trajectory,
    step_hook=None,
) -> np.ndarray:
    """Integrate one stage over ``leg_times``; base_times label the records."""
    for k in range(len(leg_times) - 1):
        t, t_next = float(leg_times[k]), float(leg_times[k + 1])
        v = model(x, t)
        _check_velocity(v, stage, k)
        x = x + (t_next - t) * v
        if step_hook is not None:
            x = step_hook(x, t_next)
        traj.record(base_times[k + 1], t_next, stage, x)
    return x


def _stage_times(solver: SolverGrid, k_lo: int, k_hi: int, start_t: float, end_t: float) -> np.ndarray:
    """Shift-family time grid with k_hi - k_lo steps from start_t to end_t.

    The base segment's uniform parameters are remapped affinely onto the
    target interval, staying within the same shift family.
    """
    u = 1.0 - np.arange(solver.n_steps + 1) / solver.n_steps
    seg = u[k_lo:k_hi + 1]
    u_start = float(solver.unwarp(start_t))
    u_end = float(solver.unwarp(end_t))
    scaled = u_end + (seg - seg[-1]) * (u_start - u_end) / (seg[0] - seg[-1])
    times = np.asarray(solver.warp(scaled), dtype=np.float64)
    times[0], times[-1] = start_t, end_t
    return times


def sample_baseline(
    model: VelocityFn,
    grid: tuple[int, int],
    solver: SolverGrid,
    rng,
    lead_shape: tuple[int, ...] = (1, 1),
) -> Trajectory:
    """Plain single-resolution Euler flow from noise at t=1 to t=0."""
    seed = None if isinstance(rng, np.random.Generator) else rng
    rng = as_rng(rng)
    traj = Trajectory(seed=seed)
    x = rng.standard_normal(tuple(lead_shape) + tuple(grid))
    traj.record(1.0, 1.0, 0, x)
    x = _euler_leg(model, x, solver.times, solver.times, 0, traj)
    traj.final = x
    return traj


def sample_progressive(
    model: VelocityFn,
    schedule: Schedule,
    solver: SolverGrid,
    kind: TransformKind,
    rng,
    lead_shape: tuple[int, ...] = (1, 1),
) -> Trajectory:
    """Euler flow with resolution expansions at the schedule's transitions."""
    if schedule.solver != solver:
        raise ValueError("schedule was planned on a different solver grid")
    seed = None if isinstance(rng, np.random.Generator) else rng
    rng = as_rng(rng)
    x = rng.standard_normal(tuple(lead_shape) + schedule.stage_grid(0))
    traj = Trajectory(seed=seed, schedule=schedule)
    traj.record(1.0, 1.0, 0, x)
    state = expansion.FlowState(field=x, t=1.0, stage=0)
    return _run_stages(model, state, schedule, solver, kind, rng, traj)


def _run_stages(
    model: VelocityFn,
    state: expansion.FlowState,
    schedule: Schedule,
    solver: SolverGrid,
    kind: TransformKind,
    rng,
    traj: Trajectory,
) -> Trajectory:
    """Integrate from ``state`` through the remaining stages to t=0."""
    n = solver.n_steps
    edges = (0,) + schedule.snap_indices + (n,)
    x = state.field
    for stage in range(state.stage, schedule.n_stages):
        k_lo, k_hi = edges[stage], edges[stage + 1]
        end_t = schedule.transitions[stage] if stage < schedule.n_stages - 1 else 0.0
        if stage == 0:
            leg = solver.times[k_lo:k_hi + 1]
        else:
            leg = _stage_times(solver, k_lo, k_hi, state.t, end_t)
        x = _euler_leg(model, x, leg, solver.times[k_lo:k_hi + 1], stage, traj)
        if stage < schedule.n_stages - 1:
            state = expansion.expand(
                expansion.FlowState(field=x, t=end_t, stage=stage), schedule, kind, rng
            )
            x = state.field
        else:
            state = expansion.FlowState(field=x, t=0.0, stage=stage)
    traj.final = x
    return traj


def run_passthrough(
    model: VelocityFn,
    power_law: PowerLaw,
    delta: float,
    solver: SolverGrid,
    rng,
    grid: tuple[int, int],
    kind: TransformKind = TransformKind.DCT,
    lead_shape: tuple[int, ...] = (1, 1),
) -> Trajectory:
    """Baseline loop that re-injects initial noise into inactive frequencies
    after every Euler step."""
    seed = None if isinstance(rng, np.random.Generator) else rng
    rng = as_rng(rng)
    traj = Trajectory(seed=seed)
    x = rng.standard_normal(tuple(lead_shape) + tuple(grid))
    noise0 = x.copy()
    traj.record(1.0, 1.0, 0, x)

    def hook(xs: np.ndarray, t_next: float) -> np.ndarray:
        st = expansion.passthrough_filter(
            expansion.FlowState(field=xs, t=t_next, stage=0), noise0, power_law, delta, kind
        )
        return st.field

    x = _euler_leg(model, x, solver.times, solver.times, 0, traj, step_hook=hook)
    traj.final = x
    return traj
