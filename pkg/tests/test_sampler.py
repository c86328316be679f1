import numpy as np
import pytest

from specdiff import spectral
from specdiff.oracle import GaussianModel, OracleVelocity, optimal_gain
from specdiff.sampler import (
    _stage_times,
    run_passthrough,
    sample_baseline,
    sample_progressive,
)
from specdiff.schedule import SolverGrid, plan
from specdiff.spectral import TransformKind
from specdiff.spectrum import PowerLaw

LAW = PowerLaw(A=4.0, beta=1.0)
KIND = TransformKind.DCT


def oracle_model(grid, channels=1):
    return OracleVelocity(GaussianModel(power_law=LAW, grid=grid, channels=channels))


def test_single_stage_schedule_is_bitwise_baseline():
    solver = SolverGrid(30, 3.0)
    sched = plan(LAW, (1.0,), (16, 16), 0.01, solver)
    model = oracle_model((16, 16))
    prog = sample_progressive(model, sched, solver, KIND, 7)
    base = sample_baseline(model, (16, 16), solver, 7)
    assert np.array_equal(prog.final, base.final)
    assert prog.times == base.times


def test_zero_velocity_model_returns_initial_noise():
    solver = SolverGrid(10, 3.0)

    def zero(field, t):
        return np.zeros_like(field)

    traj = sample_baseline(zero, (8, 8), solver, 3)
    x0 = np.random.default_rng(3).standard_normal((1, 1, 8, 8))
    assert np.array_equal(traj.final, x0)


def test_baseline_determinism():
    solver = SolverGrid(20, 3.0)
    model = oracle_model((8, 8))
    a = sample_baseline(model, (8, 8), solver, 11)
    b = sample_baseline(model, (8, 8), solver, 11)
    assert np.array_equal(a.final, b.final)
    assert a.means == b.means


def test_progressive_determinism_and_stage_grids():
    solver = SolverGrid(40, 3.0)
    sched = plan(LAW, (0.5, 1.0), (16, 16), 0.01, solver)
    model = oracle_model((16, 16))
    a = sample_progressive(model, sched, solver, KIND, 5)
    b = sample_progressive(model, sched, solver, KIND, 5)
    assert np.array_equal(a.final, b.final)
    assert a.final.shape == (1, 1, 16, 16)
    # stage indices recorded are non-decreasing, base times strictly decreasing
    assert all(s2 >= s1 for s1, s2 in zip(a.stages, a.stages[1:]))
    assert all(t2 < t1 for t1, t2 in zip(a.times, a.times[1:]))
    assert a.times[-1] == 0.0
    # model times jump upward exactly once (at the expansion)
    jumps = sum(1 for u, v in zip(a.model_times, a.model_times[1:]) if v > u)
    assert jumps == 1


def test_progressive_step_budget_matches_split():
    solver = SolverGrid(40, 3.0)
    sched = plan(LAW, (0.5, 1.0), (16, 16), 0.01, solver)
    model = oracle_model((16, 16))
    traj = sample_progressive(model, sched, solver, KIND, 1)
    # one record per Euler step plus the initial state
    assert len(traj.times) == solver.n_steps + 1
    k1 = sched.snap_indices[0]
    assert traj.stages[k1] == 0 and traj.stages[k1 + 1] == 1


def test_stage_times_shift_family_and_endpoints():
    solver = SolverGrid(50, 3.0)
    times = _stage_times(solver, 20, 50, 0.83, 0.0)
    assert times[0] == 0.83 and times[-1] == 0.0
    assert len(times) == 31
    assert np.all(np.diff(times) < 0)
    # same shift family: unwarp is affine in the base segment's u values
    u = solver.unwarp(times)
    base_u = 1.0 - np.arange(51)[20:] / 50
    fit = np.polyfit(base_u, u, 1)
    assert np.max(np.abs(np.polyval(fit, base_u) - u)) < 1e-12


def test_nan_velocity_aborts_with_diagnostic():
    solver = SolverGrid(5, 3.0)

    def bad(field, t):
        v = np.zeros_like(field)
        v[..., 0, 0] = np.nan
        return v

    with pytest.raises(ValueError, match="non-finite"):
        sample_baseline(bad, (4, 4), solver, 0)


def test_single_frequency_terminal_error_order():
    # per-frequency terminal variance error under Euler scales ~ 1/steps:
    # log-log slope within [0.8, 1.2]; deterministic gain-product recursion
    p = 0.7
    errs, ns = [], (25, 50, 100, 200, 400)
    for n in ns:
        solver = SolverGrid(n, 3.0)
        var = 1.0
        for k in range(n):
            t, tn = solver.times[k], solver.times[k + 1]
            var *= (1.0 + (tn - t) * optimal_gain(p, t)) ** 2
        errs.append(abs(var - p))
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_progressive_low_band_matches_baseline_with_shared_noise():
    # with the baseline's low-band initial noise forced equal to the
    # progressive run's initial noise, the low bands agree up to Euler
    # discretization error, shrinking as the step count doubles
    grid = (16, 16)
    model = oracle_model(grid)
    diffs = []
    for n_steps in (50, 100, 200):
        solver = SolverGrid(n_steps, 3.0)
        sched = plan(LAW, (0.5, 1.0), grid, 0.01, solver)
        rng = np.random.default_rng(77)
        eps_small = rng.standard_normal((1, 1, 8, 8))
        prog = sample_progressive(
            model, sched, solver, KIND, np.random.default_rng(77)
        )
        # baseline from full-grid noise whose low band matches eps_small
        rng2 = np.random.default_rng(1077)
        eps_full = rng2.standard_normal((1, 1, 16, 16))
        spec_full = spectral.forward(eps_full, KIND).coeffs
        spec_small = spectral.forward(eps_small, KIND).coeffs
        spec_full[..., :8, :8] = spec_small
        x = spectral.inverse(spectral.Spectrum(coeffs=spec_full, kind=KIND))
        for k in range(n_steps):
            t, tn = solver.times[k], solver.times[k + 1]
            x = x + (tn - t) * model(x, t)
        low_prog = spectral.extract(spectral.forward(prog.final, KIND), (8, 8)).coeffs
        low_base = spectral.extract(spectral.forward(x, KIND), (8, 8)).coeffs
        diffs.append(float(np.linalg.norm(low_prog - low_base) / np.linalg.norm(low_base)))
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] < 0.02


def test_three_stage_progressive_run():
    solver = SolverGrid(60, 3.0)
    sched = plan(LAW, (0.25, 0.5, 1.0), (32, 32), 0.01, solver)
    model = oracle_model((32, 32))
    traj = sample_progressive(model, sched, solver, KIND, 2)
    assert traj.final.shape == (1, 1, 32, 32)
    assert np.isfinite(traj.final).all()
    assert traj.times[-1] == 0.0
    # stage step counts follow the snap split
    split = sched.step_split()
    counts = [traj.stages.count(i) for i in range(3)]
    counts[0] -= 1  # initial record is stage 0
    assert tuple(counts) == split
    # every state within a stage lies on that stage's grid (spot check via
    # a velocity model that asserts grid sizes)
    seen = []

    def checking_model(field, t):
        seen.append(field.shape[-2:])
        return model(field, t)

    sample_progressive(checking_model, sched, solver, KIND, 2)
    expected = []
    for i, steps in enumerate(split):
        expected += [sched.stage_grid(i)] * steps
    assert seen == expected


def test_passthrough_trivial_when_no_slot_active():
    grid = (8, 8)
    solver = SolverGrid(12, 3.0)
    model = oracle_model(grid)
    # enormous power at every frequency: t_omega == 1 for all slots
    heavy = PowerLaw(A=1e12, beta=0.1)
    base = sample_baseline(model, grid, solver, 9)
    filt = run_passthrough(model, heavy, 1e-6, solver, 9, grid, KIND)
    assert np.array_equal(base.final, filt.final)


def test_passthrough_delta_sweep_monotone():
    grid = (16, 16)
    solver = SolverGrid(25, 3.0)
    law = PowerLaw(A=30.0, beta=2.0)
    model = OracleVelocity(GaussianModel(power_law=law, grid=grid))
    dists = []
    for delta in (1e-4, 1e-3, 0.01, 0.05, 0.1):
        ds = []
        for seed in range(3):
            base = sample_baseline(model, grid, solver, seed)
            filt = run_passthrough(model, law, delta, solver, seed, grid, KIND)
            ds.append(np.linalg.norm(filt.final - base.final) / np.linalg.norm(base.final))
        dists.append(np.mean(ds))
    assert all(b >= a for a, b in zip(dists, dists[1:]))
    assert dists[-1] > dists[0]


def test_trajectory_final_spectrum_reasonable():
    # coarse sanity that progressive sampling lands near the model spectrum
    grid = (16, 16)
    solver = SolverGrid(50, 1.0)
    sched = plan(LAW, (0.5, 1.0), grid, 0.01, solver)
    model = oracle_model(grid, channels=4)
    finals = [
        sample_progressive(model, sched, solver, KIND, sd, (4, 1)).final for sd in range(100)
    ]
    coeffs = spectral.forward(np.stack(finals), KIND).coeffs
    var = (np.abs(coeffs) ** 2).reshape(-1, 16, 16).mean(axis=0)
    P = GaussianModel(power_law=LAW, grid=grid).slot_power(1.0)
    low = np.s_[1:6, 1:6]
    assert np.max(np.abs(var[low] / P[low] - 1.0)) < 0.2
