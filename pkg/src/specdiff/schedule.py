"""Resolution schedules: activation/transition times, timestep alignment,
and snapping onto a discrete solver grid.

Times run from t=1 (pure noise) down to t=0 (data). The solver grid uses
the shift reparameterization t = shift*u / (1 + (shift-1)*u) over uniform u.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import TransformKind, scale_band_limit
from .spectrum import PowerLaw


@dataclass(frozen=True)
class SolverGrid:
    """Discrete solver times t_0=1 > ... > t_n=0 under a shift warp."""

    n_steps: int
    shift: float = 3.0

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("solver needs at least one step")
        if not self.shift > 0:
            raise ValueError(f"shift must be positive, got {self.shift}")

    @cached_property
    def times(self) -> np.ndarray:
        u = 1.0 - np.arange(self.n_steps + 1) / self.n_steps
        t = self.warp(u)
        t[0], t[-1] = 1.0, 0.0
        t.setflags(write=False)
        return t

    def warp(self, u):
        s = self.shift
        return s * np.asarray(u, dtype=np.float64) / (1.0 + (s - 1.0) * np.asarray(u))

    def unwarp(self, t):
        s = self.shift
        return np.asarray(t, dtype=np.float64) / (s - (s - 1.0) * np.asarray(t))


def activation_time_for_power(power, delta: float):
    """t_omega = 1 / (1 + sqrt(delta / (P * (1 + P - delta)))).

    Vectorized over ``power``; P = +inf yields t = 1 (never activates
    earlier than pure noise), which is how DC slots fall out naturally.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    p = np.asarray(power, dtype=np.float64)
    if np.any(p <= 0):
        raise ValueError("power must be positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        rad = delta / (p * (1.0 + p - delta))
        rad = np.where(np.isfinite(p), rad, 0.0)
    t = 1.0 / (1.0 + np.sqrt(rad))
    return float(t) if np.isscalar(power) else t


def activation_time(power_law: PowerLaw, omega: float, delta: float) -> float:
    """Earliest time at which frequency ``omega`` is still noise-dominated."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return activation_time_for_power(power_law.evaluate(omega), delta)


def transition_time(
    power_law: PowerLaw,
    s: float,
    full_grid: tuple[int, int],
    delta: float,
    kind: TransformKind = TransformKind.DCT,
) -> float:
    """Optimal time to leave scale ``s``: the activation time of the highest
    radial frequency the scale-s band carries (in the transform's own index
    units, see spectral.scale_band_limit)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"scale must lie in (0, 1), got {s}")
    boundary = scale_band_limit(kind, full_grid, s)
    if not boundary > 0:
        raise ValueError(f"boundary frequency must be positive, got {boundary}")
    return activation_time(power_law, boundary, delta)


def align(t: float, r: float) -> tuple[float, float]:
    """Aligned restart time and rescale for a resolution ratio r > 1.

    Returns (t_aligned, kappa) with t_aligned = r*t / (1 + (r-1)*t) and
    kappa = r / (1 + (r-1)*t), satisfying kappa*t = t_aligned and
    kappa*(1-t) = r*(1 - t_aligned).
    """
    if not r > 1.0:
        raise ValueError(f"resolution ratio must exceed 1, got {r}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    denom = 1.0 + (r - 1.0) * t
    return r * t / denom, r / denom


@dataclass(frozen=True)
class Schedule:
    """Planned resolution schedule snapped onto a solver grid.

    ``transitions`` are the snapped times (strictly decreasing), one per
    scale change; ``snap_indices`` are their positions on ``solver.times``.
    """

    delta: float
    scales: tuple[float, ...]
    full_grid: tuple[int, int]
    solver: SolverGrid
    kind: TransformKind = TransformKind.DCT
    transitions_star: tuple[float, ...] = ()
    transitions: tuple[float, ...] = ()
    snap_indices: tuple[int, ...] = ()
    aligned_times: tuple[float, ...] = ()
    rescales: tuple[float, ...] = ()
    ratios: tuple[float, ...] = ()

    @property
    def n_stages(self) -> int:
        return len(self.scales)

    def stage_grid(self, stage: int) -> tuple[int, int]:
        s = self.scales[stage]
        h = s * self.full_grid[0]
        w = s * self.full_grid[1]
        return int(round(h)), int(round(w))

    def step_split(self) -> tuple[int, ...]:
        """Solver steps spent in each stage."""
        edges = (0,) + self.snap_indices + (self.solver.n_steps,)
        return tuple(edges[i + 1] - edges[i] for i in range(len(edges) - 1))

    def stage_bounds(self, stage: int) -> tuple[float, float, float]:
        """(t_lower, t_upper_raw, t_upper_aligned) of a stage's interval."""
        upper_raw = 1.0 if stage == 0 else self.transitions[stage - 1]
        upper_aligned = 1.0 if stage == 0 else self.aligned_times[stage - 1]
        lower = 0.0 if stage == self.n_stages - 1 else self.transitions[stage]
        return lower, upper_raw, upper_aligned

    def to_json(self) -> str:
        rec = {
            "delta": self.delta,
            "scales": list(self.scales),
            "full_grid": list(self.full_grid),
            "kind": self.kind.value,
            "solver": {"n_steps": self.solver.n_steps, "shift": self.solver.shift},
            "transitions_star": list(self.transitions_star),
            "transitions": list(self.transitions),
            "snap_indices": list(self.snap_indices),
            "aligned_times": list(self.aligned_times),
            "rescales": list(self.rescales),
            "ratios": list(self.ratios),
        }
        return json.dumps(rec, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        rec = json.loads(text)
        return cls(
            delta=float(rec["delta"]),
            scales=tuple(float(s) for s in rec["scales"]),
            full_grid=(int(rec["full_grid"][0]), int(rec["full_grid"][1])),
            solver=SolverGrid(int(rec["solver"]["n_steps"]), float(rec["solver"]["shift"])),
            kind=TransformKind.parse(rec.get("kind", "dct")),
            transitions_star=tuple(float(t) for t in rec["transitions_star"]),
            transitions=tuple(float(t) for t in rec["transitions"]),
            snap_indices=tuple(int(k) for k in rec["snap_indices"]),
            aligned_times=tuple(float(t) for t in rec["aligned_times"]),
            rescales=tuple(float(k) for k in rec["rescales"]),
            ratios=tuple(float(r) for r in rec["ratios"]),
        )


def _validate_scales(scales, full_grid, kind) -> tuple[float, ...]:
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise ValueError("need at least one scale")
    if any(not 0.0 < s <= 1.0 for s in scales):
        raise ValueError(f"scales must lie in (0, 1], got {scales}")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError(f"scales must be strictly increasing, got {scales}")
    if scales[-1] != 1.0:
        raise ValueError(f"last scale must be 1, got {scales[-1]}")
    h, w = full_grid
    for s in scales:
        for dim in (s * h, s * w):
            if abs(dim - round(dim)) > 1e-9:
                raise ValueError(f"scale {s} gives a non-integral grid on {full_grid}")
    if kind is TransformKind.DWT:
        for a, b in zip(scales, scales[1:]):
            ratio = b / a
            if abs(ratio - round(ratio)) > 1e-9 or int(round(ratio)) & (int(round(ratio)) - 1) != 0:
                raise ValueError(f"DWT schedules need power-of-two scale ratios, got {a} -> {b}")
    return scales


def plan(
    power_law: PowerLaw,
    scales,
    full_grid: tuple[int, int],
    delta: float,
    solver: SolverGrid,
    kind: TransformKind = TransformKind.DCT,
) -> Schedule:
    """Plan transition times for the given scales, snapped onto the solver.

    Each optimal time snaps to the nearest solver time that is >= it, so the
    error bound still holds at the snapped transition. Colliding snaps or a
    stage left with zero steps raise instead of silently merging stages.
    """
    full_grid = (int(full_grid[0]), int(full_grid[1]))
    scales = _validate_scales(scales, full_grid, kind)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not power_law.beta > 0:
        raise ValueError(
            f"schedule planning needs a strictly decreasing power law (beta > 0), got beta={power_law.beta}"
        )

    times = solver.times
    t_star, snapped, indices = [], [], []
    for s in scales[:-1]:
        ts = transition_time(power_law, s, full_grid, delta, kind)
        k = int(np.nonzero(times >= ts - 1e-12)[0][-1])
        t_star.append(ts)
        indices.append(k)
        snapped.append(float(times[k]))

    for i in range(1, len(indices)):
        if indices[i] <= indices[i - 1]:
            raise ValueError(
                "transition snapping collided: scales "
                f"{scales[i - 1]} and {scales[i]} both land on solver step {indices[i]}; "
                "use more steps, a smaller delta, or fewer stages"
            )
    if indices and indices[0] < 1:
        raise ValueError("first stage would get zero solver steps; transition snapped to t=1")

    aligned, rescales, ratios = [], [], []
    for i, tk in enumerate(snapped):
        r = scales[i + 1] / scales[i]
        t_al, kappa = align(tk, r)
        aligned.append(t_al)
        rescales.append(kappa)
        ratios.append(r)

    return Schedule(
        delta=float(delta),
        scales=scales,
        full_grid=full_grid,
        solver=solver,
        kind=kind,
        transitions_star=tuple(t_star),
        transitions=tuple(snapped),
        snap_indices=tuple(indices),
        aligned_times=tuple(aligned),
        rescales=tuple(rescales),
        ratios=tuple(ratios),
    )
