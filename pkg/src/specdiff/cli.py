"""Command-line surface tying the library into reproducible runs.

Subcommands: fit-spectrum, plan, sample, passthrough, edit, cost,
train-toy, plot. Configuration comes from an optional flat key=value file
plus flags (flags win). Every stochastic command requires --seed; given the
same config and seed, output files are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cost as cost_mod
from . import editor, oracle, sampler, spectrum, targets, tensorfile
from .schedule import Schedule, SolverGrid, plan
from .spectral import TransformKind
from .spectrum import PowerLaw

PASSTHROUGH_DELTAS = (1e-4, 1e-3, 0.01, 0.05, 0.1)


def _fail(module: str, exc: Exception) -> int:
    print(f"specdiff {module}: {exc}", file=sys.stderr)
    return 1


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_config(path) -> dict:
    cfg = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg[key] = value
    return cfg


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill in argument defaults from --config; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    cfg = _load_config(args.config)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _threads(args) -> int:
    val = getattr(args, "threads", None)
    if val is None:
        val = os.environ.get("SPECDIFF_THREADS")
    if val is None:
        return os.cpu_count() or 1
    return max(1, int(val))


def _parse_grid(text) -> tuple[int, int]:
    parts = str(text).lower().replace("x", ",").split(",")
    if len(parts) == 1:
        parts = parts * 2
    return int(parts[0]), int(parts[1])


def _parse_scales(text) -> tuple[float, ...]:
    return tuple(float(s) for s in str(text).split(","))


def _load_schedule(path) -> Schedule:
    with open(path) as fh:
        return Schedule.from_json(fh.read())


def _model_from_law(args, law: PowerLaw, grid) -> oracle.GaussianModel:
    return oracle.GaussianModel(
        power_law=law,
        grid=grid,
        channels=int(args.channels),
        frames=int(args.frames),
        kind=TransformKind.parse(args.kind),
    )


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def svg_line_chart(path, series: dict[str, tuple[list, list]], width=640, height=420,
                   title: str = "") -> None:
    """Minimal deterministic SVG polyline chart (one polyline per series)."""
    pad = 50.0
    xs = [x for pts in series.values() for x in pts[0]]
    ys = [y for pts in series.values() for y in pts[1]]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xr = (x1 - x0) or 1.0
    yr = (y1 - y0) or 1.0
    colors = ["#1f6fb2", "#c23b22", "#2e8b57", "#8a2be2", "#b8860b", "#444444"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" font-size="11">{x1:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="11">{y0:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="11">{y1:.4g}</text>',
    ]
    for idx, (name, (sx, sy)) in enumerate(series.items()):
        pts = " ".join(
            f"{pad + (x - x0) / xr * (width - 2 * pad):.2f},"
            f"{height - pad - (y - y0) / yr * (height - 2 * pad):.2f}"
            for x, y in zip(sx, sy)
        )
        color = colors[idx % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad}" y="{pad + 14 * idx}" text-anchor="end" '
            f'font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def cmd_fit_spectrum(args) -> int:
    kind = TransformKind.parse(args.kind)
    fields = [tensorfile.read_tensor(p) for p in args.inputs]
    spec = spectrum.estimate_radial_spectrum(fields, kind)
    law = spectrum.fit_power_law(
        spec,
        omega_min=args.omega_min,
        omega_max=args.omega_max,
        weight_by_count=args.weight_by_count,
    )
    if law.r_squared < 0.5 or law.beta < 0.1:
        _progress(
            f"warning: weak power-law fit (beta={law.beta:.4f}, R^2={law.r_squared:.4f}); "
            "spectrum may be flat"
        )
    spectrum.radial_spectrum_to_csv(spec, args.out_csv)
    with open(args.out_law, "w") as fh:
        fh.write(spectrum.power_law_record(law, grid=spec.grid, kind=kind))
    print(f"A = {law.A:.6g}  beta = {law.beta:.6g}  R^2 = {law.r_squared:.6g}")
    return 0


def cmd_plan(args) -> int:
    law, _ = spectrum.load_power_law(args.law)
    solver = SolverGrid(int(args.steps), float(args.shift))
    sched = plan(
        law,
        _parse_scales(args.scales),
        _parse_grid(args.grid),
        float(args.delta),
        solver,
        TransformKind.parse(args.kind),
    )
    with open(args.out, "w") as fh:
        fh.write(sched.to_json())
    print(f"{'stage':>6} {'scale':>7} {'grid':>10} {'steps':>6} {'t* (exact)':>12} {'t (snapped)':>12} {'step idx':>9}")
    split = sched.step_split()
    for i, s in enumerate(sched.scales):
        h, w = sched.stage_grid(i)
        tstar = f"{sched.transitions_star[i]:.6f}" if i < sched.n_stages - 1 else "-"
        tsnap = f"{sched.transitions[i]:.6f}" if i < sched.n_stages - 1 else "-"
        idx = f"{sched.snap_indices[i]}" if i < sched.n_stages - 1 else "-"
        print(f"{i + 1:>6} {s:>7.3f} {f'{h}x{w}':>10} {split[i]:>6} {tstar:>12} {tsnap:>12} {idx:>9}")
    return 0


def _sample_one(model, sched, solver, kind, seed, lead_shape, baseline):
    if baseline:
        return sampler.sample_baseline(model, sched.stage_grid(sched.n_stages - 1), solver, seed, lead_shape)
    return sampler.sample_progressive(model, sched, solver, kind, seed, lead_shape)


def cmd_sample(args) -> int:
    kind = TransformKind.parse(args.kind)
    law, _ = spectrum.load_power_law(args.law)
    sched = _load_schedule(args.schedule)
    model = oracle.OracleVelocity(_model_from_law(args, law, sched.full_grid))
    lead = (int(args.channels), int(args.frames))
    seeds = [int(args.seed) + i for i in range(int(args.batch))]
    workers = min(_threads(args), len(seeds))
    _progress(f"sampling {len(seeds)} trajectories on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        trajs = list(
            pool.map(
                lambda sd: _sample_one(model, sched, sched.solver, kind, sd, lead, args.baseline),
                seeds,
            )
        )
    for i, traj in enumerate(trajs):
        path = args.out if len(seeds) == 1 else _numbered(args.out, i)
        tensorfile.write_tensor(path, traj.final)
    if args.summary:
        traj = trajs[0]
        write_csv(
            args.summary,
            ["step", "t_base", "t_model", "stage", "mean", "var"],
            [
                (k, traj.times[k], traj.model_times[k], traj.stages[k], traj.means[k], traj.variances[k])
                for k in range(len(traj.times))
            ],
        )
    return 0


def _numbered(path: str, i: int) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_{i:04d}{ext}"


def cmd_passthrough(args) -> int:
    kind = TransformKind.parse(args.kind)
    law, _ = spectrum.load_power_law(args.law)
    grid = _parse_grid(args.grid)
    solver = SolverGrid(int(args.steps), float(args.shift))
    model = oracle.OracleVelocity(_model_from_law(args, law, grid))
    lead = (int(args.channels), int(args.frames))
    deltas = [float(d) for d in args.deltas.split(",")] if args.deltas else list(PASSTHROUGH_DELTAS)
    seeds = [int(args.seed) + i for i in range(int(args.batch))]
    rows = []
    for delta in deltas:
        dists = []
        for sd in seeds:
            base = sampler.sample_baseline(model, grid, solver, sd, lead)
            filt = sampler.run_passthrough(model, law, delta, solver, sd, grid, kind, lead)
            dists.append(
                float(np.linalg.norm(filt.final - base.final) / np.linalg.norm(base.final))
            )
        rows.append((delta, float(np.mean(dists))))
        _progress(f"delta={delta:g}: mean relative RMS distortion {rows[-1][1]:.6f}")
    write_csv(args.out, ["delta", "distortion"], rows)
    if args.plot:
        svg_line_chart(
            args.plot,
            {"distortion": ([r[0] for r in rows], [r[1] for r in rows])},
            title="passthrough distortion vs delta",
        )
    return 0


def cmd_edit(args) -> int:
    kind = TransformKind.parse(args.kind)
    law, _ = spectrum.load_power_law(args.law)
    sched = _load_schedule(args.schedule)
    field = tensorfile.read_tensor(args.input)
    model = oracle.OracleVelocity(_model_from_law(args, law, sched.full_grid))
    out = editor.edit(
        field,
        sched,
        int(args.k),
        model,
        kind,
        int(args.seed),
        noise_low_band=not args.no_lowband_noise,
    )
    tensorfile.write_tensor(args.out, out)
    info = editor.edit_bookkeeping(sched, int(args.k))
    _progress(
        f"edited from transition {args.k} (t={info['t_k']:.4f}), "
        f"{info['steps_used']}/{info['steps_total']} steps, skipped span {info['skipped_span']:.4f}"
    )
    return 0


def cmd_cost(args) -> int:
    arch = cost_mod.get_arch(args.arch)
    sched = _load_schedule(args.schedule)
    report = cost_mod.trajectory_cost(arch, sched)
    print(cost_mod.report_table(report))
    if args.out:
        write_csv(
            args.out,
            ["scale", "tokens", "steps", "flops", "attn_flops"],
            [(s.scale, s.tokens, s.steps, s.flops, s.attn_flops) for s in report.stages],
        )
    return 0


def cmd_train_toy(args) -> int:
    kind = TransformKind.parse(args.kind)
    law, _ = spectrum.load_power_law(args.law)
    sched = _load_schedule(args.schedule)
    gauss = _model_from_law(args, law, sched.full_grid)
    net = targets.ToyNet(sched, kind, n_time_bins=int(args.time_bins))
    batch = int(args.batch)

    def data_sampler(rng):
        return oracle.sample_clean(gauss, rng, batch=(batch,))

    _progress(f"training toy gain net for {args.steps} steps (batch {batch})")
    targets.train_toy(net, data_sampler, sched, int(args.steps), float(args.lr), int(args.seed))
    write_csv(args.out_loss, ["step", "loss"], list(enumerate(net.loss_history)))
    stacked = np.stack([g for g in net.gains[0]])
    tensorfile.write_tensor(args.out_gains, stacked)
    _progress(f"final loss {net.loss_history[-1]:.6f}")
    return 0


def cmd_plot(args) -> int:
    with open(args.input) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{args.input}: empty CSV")
    ycols = args.y.split(",")
    series = {}
    for yc in ycols:
        series[yc] = (
            [float(r[args.x]) for r in rows],
            [float(r[yc]) for r in rows],
        )
    svg_line_chart(args.out, series, title=args.title or os.path.basename(args.input))
    return 0


def _add_common(p, *, seed=False, kind=True):
    p.add_argument("--config", help="flat key=value config file; flags win")
    if kind:
        p.add_argument("--kind", default=None, help="transform kind: dct, dwt or fft (default dct)")
    if seed:
        p.add_argument("--seed", required=True, type=int, help="RNG seed (required)")
    p.add_argument("--channels", default=None, help="field channels (default 1)")
    p.add_argument("--frames", default=None, help="field frames (default 1)")
    p.add_argument("--threads", default=None, help="worker threads (default: all cores, or SPECDIFF_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="specdiff", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-spectrum", help="estimate a radial spectrum and fit a power law")
    p.add_argument("inputs", nargs="+", help="tensor files (one field each)")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-law", required=True)
    p.add_argument("--omega-min", type=float, default=None)
    p.add_argument("--omega-max", type=float, default=None)
    p.add_argument("--weight-by-count", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_fit_spectrum)

    p = sub.add_parser("plan", help="plan a resolution schedule from a power-law record")
    p.add_argument("--law", required=True)
    p.add_argument("--scales", required=True, help="comma-separated, e.g. 0.5,1")
    p.add_argument("--grid", required=True, help="full grid, e.g. 128x128")
    p.add_argument("--delta", default=None, help="error tolerance (default 0.01)")
    p.add_argument("--steps", default=None, help="solver steps (default 50)")
    p.add_argument("--shift", default=None, help="solver shift (default 3.0)")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample", help="sample from the analytic oracle model")
    p.add_argument("--law", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--baseline", action="store_true", help="single-resolution baseline run")
    p.add_argument("--batch", default=1, help="number of seeds (files numbered)")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="per-step CSV summary for the first trajectory")
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("passthrough", help="noise-passthrough delta sweep")
    p.add_argument("--law", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--steps", default=None)
    p.add_argument("--shift", default=None)
    p.add_argument("--deltas", default=None, help="comma-separated delta values")
    p.add_argument("--batch", default=4, help="seeds per delta")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="optional SVG output")
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_passthrough)

    p = sub.add_parser("edit", help="frequency-based editing of an input field")
    p.add_argument("--input", required=True)
    p.add_argument("--law", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--k", required=True, help="transition index to enter at (1-based)")
    p.add_argument("--no-lowband-noise", action="store_true", help="keep the clean low band")
    p.add_argument("--out", required=True)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("cost", help="FLOP accounting for a planned schedule")
    p.add_argument("--arch", required=True, help="arch preset name (see data/arch_presets.cfg)")
    p.add_argument("--schedule", required=True)
    p.add_argument("--out", default=None)
    _add_common(p, kind=False)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("train-toy", help="train the toy gain net on oracle data")
    p.add_argument("--law", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--steps", default=200)
    p.add_argument("--lr", default=0.3)
    p.add_argument("--batch", default=64)
    p.add_argument("--time-bins", default=8)
    p.add_argument("--out-loss", required=True)
    p.add_argument("--out-gains", required=True)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("plot", help="SVG line chart from a CSV")
    p.add_argument("input")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True, help="comma-separated column names")
    p.add_argument("--title", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return ap


_DEFAULTS = {
    "kind": "dct",
    "channels": "1",
    "frames": "1",
    "delta": "0.01",
    "steps": "50",
    "shift": "3.0",
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args = _apply_config(args)
        for key, val in _DEFAULTS.items():
            if hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, val)
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        return _fail(args.command, exc)


if __name__ == "__main__":
    sys.exit(main())
