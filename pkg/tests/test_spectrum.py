import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdiff.oracle import GaussianModel, sample_clean
from specdiff.spectral import TransformKind
from specdiff.spectrum import (
    PowerLaw,
    RadialSpectrum,
    estimate_radial_spectrum,
    fit_power_law,
    load_power_law,
    power_law_record,
    radial_spectrum_to_csv,
    snr,
)


def synthetic_spectrum(A, beta, n_bins=20):
    centers = np.arange(n_bins, dtype=float)
    powers = np.zeros(n_bins)
    powers[1:] = A * centers[1:] ** (-beta)
    return RadialSpectrum(
        centers=centers,
        powers=powers,
        counts=np.ones(n_bins, dtype=int),
        grid=(32, 32),
        kind=TransformKind.DCT,
        n_samples=1,
    )


def test_zero_batch_gives_zero_bins():
    spec = estimate_radial_spectrum(np.zeros((3, 8, 8)), TransformKind.DCT)
    assert np.all(spec.powers == 0.0)


def test_constant_field_centers_to_zero():
    spec = estimate_radial_spectrum(np.full((1, 8, 8), 3.7), TransformKind.DCT)
    assert np.all(spec.powers < 1e-20)


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        estimate_radial_spectrum([], TransformKind.DCT)


def test_mismatched_batch_rejected():
    with pytest.raises(ValueError):
        estimate_radial_spectrum([np.zeros((8, 8)), np.zeros((4, 4))], TransformKind.DCT)


def test_white_noise_bins_are_flat():
    rng = np.random.default_rng(77)
    batch = rng.standard_normal((2000, 32, 32))
    spec = estimate_radial_spectrum(batch, TransformKind.DCT)
    nondc = spec.centers > 0
    assert np.max(np.abs(spec.powers[nondc] - 1.0)) < 0.05


def test_dc_bin_present_and_flagged_by_zero_center():
    rng = np.random.default_rng(1)
    spec = estimate_radial_spectrum(rng.standard_normal((4, 8, 8)), TransformKind.DCT)
    assert spec.centers[0] == 0.0
    assert np.all(np.diff(spec.centers) > 0)
    assert np.all(spec.counts > 0)


def test_fit_exact_power_law():
    law = fit_power_law(synthetic_spectrum(100.0, 2.0))
    assert law.A == pytest.approx(100.0, abs=1e-9)
    assert law.beta == pytest.approx(2.0, abs=1e-9)
    assert law.r_squared == pytest.approx(1.0, abs=1e-9)


def test_fit_two_point_hand_solve():
    spec = RadialSpectrum(
        centers=np.array([0.0, 1.0, 2.0]),
        powers=np.array([0.0, 8.0, 1.0]),
        counts=np.array([1, 4, 8]),
        grid=(4, 4),
        kind=TransformKind.DCT,
        n_samples=1,
    )
    law = fit_power_law(spec)
    assert law.beta == pytest.approx(3.0, abs=1e-12)
    assert law.A == pytest.approx(8.0, abs=1e-12)


def test_fit_needs_two_positive_bins():
    spec = synthetic_spectrum(10.0, 1.0, n_bins=2)
    with pytest.raises(ValueError):
        fit_power_law(spec)
    bad = RadialSpectrum(
        centers=np.array([0.0, 1.0, 2.0]),
        powers=np.array([0.0, 1.0, 0.0]),
        counts=np.array([1, 1, 1]),
        grid=(4, 4),
        kind=TransformKind.DCT,
        n_samples=1,
    )
    with pytest.raises(ValueError):
        fit_power_law(bad)


def test_fit_window():
    spec = synthetic_spectrum(50.0, 1.5)
    law = fit_power_law(spec, omega_min=2.0, omega_max=10.0)
    assert law.beta == pytest.approx(1.5, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_fit_scale_equivariance(c):
    base = synthetic_spectrum(20.0, 1.7)
    scaled = RadialSpectrum(
        centers=base.centers,
        powers=base.powers * c,
        counts=base.counts,
        grid=base.grid,
        kind=base.kind,
        n_samples=base.n_samples,
    )
    law0 = fit_power_law(base)
    law1 = fit_power_law(scaled)
    assert law1.beta == pytest.approx(law0.beta, rel=1e-9)
    assert law1.A == pytest.approx(law0.A * c, rel=1e-9)


def test_power_law_monotone_and_clamped():
    law = PowerLaw(A=2.0, beta=1.5)
    om = np.linspace(0.5, 100, 200)
    vals = law.evaluate(om)
    assert np.all(np.diff(vals) < 0)
    assert law.evaluate(1e12) >= 1e-12
    with pytest.raises(ValueError):
        law.evaluate(-1.0)
    with pytest.raises(ValueError):
        PowerLaw(A=0.0, beta=1.0)


def test_snr_values():
    law = PowerLaw(A=4.0, beta=2.0)  # P(1) = 4
    assert snr(law, 1.0, 0.5) == pytest.approx(4.0, rel=1e-12)  # t=0.5: SNR == P
    assert snr(law, 1.0, 1.0 / 3.0) == pytest.approx(16.0, rel=1e-12)
    with pytest.raises(ValueError):
        snr(law, 1.0, 1.0)
    with pytest.raises(ValueError):
        snr(law, 0.0, 0.5)


def test_snr_approaches_zero_near_pure_noise():
    law = PowerLaw(A=1.0, beta=2.0)
    assert snr(law, 2.0, 1.0 - 1e-9) < 1e-15


def test_estimated_spectrum_recovers_generating_law():
    # closes the loop with the Gaussian oracle: per-bin estimate within
    # 3 sigma Monte-Carlo error of the binned generating power
    law = PowerLaw(A=5.0, beta=1.2)
    model = GaussianModel(power_law=law, grid=(16, 16))
    fields = sample_clean(model, np.random.default_rng(42), batch=(1500,))
    fields = fields.reshape(1500, 16, 16)
    spec = estimate_radial_spectrum(fields, TransformKind.DCT)

    from specdiff.spectral import geometry
    from specdiff.spectrum import radial_bin_index

    radial = geometry(TransformKind.DCT, 16, 16).radial
    bins = radial_bin_index(radial)
    P = model.slot_power(1.0)
    for k, (center, power, count) in enumerate(zip(spec.centers, spec.powers, spec.counts)):
        if center == 0:
            continue  # centering removes the DC coefficient
        sel = bins == int(center)
        expected = P[sel].mean()
        se = expected * np.sqrt(2.0 / (1500 * count))
        assert abs(power - expected) < 3.0 * se


def test_serialization_roundtrip(tmp_path):
    spec = synthetic_spectrum(7.0, 1.1)
    csv_path = tmp_path / "spec.csv"
    radial_spectrum_to_csv(spec, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "omega,power,count"
    assert len(lines) == 1 + len(spec.centers)

    law = fit_power_law(spec)
    law_path = tmp_path / "law.json"
    law_path.write_text(power_law_record(law, grid=spec.grid, kind=spec.kind))
    loaded, meta = load_power_law(law_path)
    assert loaded.A == pytest.approx(law.A)
    assert loaded.beta == pytest.approx(law.beta)
    assert meta["grid"] == [32, 32]
