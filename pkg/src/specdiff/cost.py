"""Analytic transformer FLOP accounting over a progressive trajectory.

Per block and token count N (plus any jointly attended extra tokens):

    attention = 8*N*d^2 + 4*N^2*d      (QKVO projections + score/value matmuls)
    mlp       = 4*mlp_ratio*N*d^2      (two projections)

with the multiply-accumulate = 2 FLOPs convention throughout. Architecture
presets ship in a versioned config file and are approximations; only FLOP
ratios between schedules on the same preset should be read as meaningful.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

from .schedule import Schedule


@dataclass(frozen=True)
class ArchSpec:
    hidden_dim: int
    n_blocks: int
    mlp_ratio: float = 4.0
    patch: int = 1
    extra_tokens: int = 0

    def __post_init__(self):
        if min(self.hidden_dim, self.n_blocks, self.patch) < 1:
            raise ValueError("hidden_dim, n_blocks and patch must be positive")
        if self.mlp_ratio <= 0 or self.extra_tokens < 0:
            raise ValueError("mlp_ratio must be positive and extra_tokens non-negative")


@dataclass(frozen=True)
class StageCost:
    scale: float
    tokens: int
    steps: int
    flops: float
    attn_flops: float


@dataclass(frozen=True)
class CostReport:
    stages: tuple[StageCost, ...]
    total_flops: float
    total_attn_flops: float
    baseline_flops: float
    baseline_attn_flops: float

    @property
    def speedup(self) -> float:
        return self.baseline_flops / self.total_flops

    @property
    def flops_ratio(self) -> float:
        return self.total_flops / self.baseline_flops

    @property
    def attn_speedup(self) -> float:
        return self.baseline_attn_flops / self.total_attn_flops


def attention_step_flops(arch: ArchSpec, tokens: int) -> float:
    n = tokens + arch.extra_tokens
    d = arch.hidden_dim
    return arch.n_blocks * (8.0 * n * d * d + 4.0 * n * n * d)


def step_flops(arch: ArchSpec, tokens: int) -> float:
    """FLOPs of one denoiser evaluation on ``tokens`` latent tokens."""
    if tokens < 1:
        raise ValueError(f"tokens must be positive, got {tokens}")
    n = tokens + arch.extra_tokens
    d = arch.hidden_dim
    mlp = 4.0 * arch.mlp_ratio * n * d * d
    return attention_step_flops(arch, tokens) + arch.n_blocks * mlp


def _stage_tokens(arch: ArchSpec, schedule: Schedule, stage: int, patch: int) -> int:
    h, w = schedule.stage_grid(stage)
    if h % patch or w % patch:
        raise ValueError(f"stage grid {(h, w)} is not divisible by patch size {patch}")
    return (h // patch) * (w // patch)


def trajectory_cost(arch: ArchSpec, schedule: Schedule, patch: int | None = None) -> CostReport:
    """Total FLOPs of a schedule, and the speedup over the single-resolution
    run with the same total step count."""
    patch = arch.patch if patch is None else patch
    split = schedule.step_split()
    stages = []
    for i, steps in enumerate(split):
        tokens = _stage_tokens(arch, schedule, i, patch)
        stages.append(
            StageCost(
                scale=schedule.scales[i],
                tokens=tokens,
                steps=steps,
                flops=steps * step_flops(arch, tokens),
                attn_flops=steps * attention_step_flops(arch, tokens),
            )
        )
    full_tokens = _stage_tokens(arch, schedule, schedule.n_stages - 1, patch)
    n = schedule.solver.n_steps
    return CostReport(
        stages=tuple(stages),
        total_flops=sum(s.flops for s in stages),
        total_attn_flops=sum(s.attn_flops for s in stages),
        baseline_flops=n * step_flops(arch, full_tokens),
        baseline_attn_flops=n * attention_step_flops(arch, full_tokens),
    )


def report_table(report: CostReport) -> str:
    lines = [f"{'scale':>7} {'tokens':>8} {'steps':>6} {'TFLOPs':>12} {'attn TFLOPs':>12}"]
    for s in report.stages:
        lines.append(
            f"{s.scale:>7.3f} {s.tokens:>8d} {s.steps:>6d} {s.flops / 1e12:>12.2f} {s.attn_flops / 1e12:>12.2f}"
        )
    lines.append(
        f"total {report.total_flops / 1e12:.2f} TFLOPs, baseline {report.baseline_flops / 1e12:.2f} TFLOPs, "
        f"ratio {report.flops_ratio:.4f}, speedup {report.speedup:.3f}x"
    )
    return "\n".join(lines)


def load_arch_presets() -> dict[str, ArchSpec]:
    """Presets from the packaged config file (documented approximations)."""
    text = importlib.resources.files("specdiff").joinpath("data/arch_presets.cfg").read_text()
    presets: dict[str, dict[str, str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "version" or "." not in key:
            continue
        name, attr = key.split(".", 1)
        presets.setdefault(name, {})[attr] = value
    out = {}
    for name, fields in presets.items():
        out[name] = ArchSpec(
            hidden_dim=int(fields["hidden_dim"]),
            n_blocks=int(fields["n_blocks"]),
            mlp_ratio=float(fields.get("mlp_ratio", 4.0)),
            patch=int(fields.get("patch", 1)),
            extra_tokens=int(fields.get("extra_tokens", 0)),
        )
    return out


def get_arch(name_or_spec: str) -> ArchSpec:
    presets = load_arch_presets()
    if name_or_spec in presets:
        return presets[name_or_spec]
    raise ValueError(f"unknown arch preset {name_or_spec!r}; available: {sorted(presets)}")
