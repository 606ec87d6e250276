import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflq.errors import ContractError, ResonanceError
from qflq.fourier_op import adjoint, evaluate
from qflq.lambda_model import (
    CurveTable,
    DriveSpec,
    LambdaExperiment,
    bichromatic_drive,
    build_lambda,
    default_grid,
    fig1a_drive,
    fig1b_drive,
    fig2_drive,
    omega_eff,
    p12_effective,
    residual_spectrum,
    run_experiment,
    spectral_peaks,
)
from qflq.magnus import expand
from qflq.propagator import TimeGrid, evolve_exact

SQRT2 = math.sqrt(2.0)


def test_build_lambda_at_zero():
    H = build_lambda(fig1b_drive())
    a = 0.2
    expected = np.array([[0, 0, a], [0, 0, a], [a, a, 0]])
    np.testing.assert_allclose(evaluate(H, 0.0), expected, atol=1e-15)


def test_fig1b_support():
    H = build_lambda(fig1b_drive())
    assert H.support == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert H.distance(adjoint(H)) == 0.0


def test_omega_eff_fig1_equal():
    expected = 0.01 * (1 + SQRT2 / 2)
    a, b = omega_eff(fig1a_drive()), omega_eff(fig1b_drive())
    assert a == pytest.approx(expected, rel=1e-14)
    assert b == pytest.approx(expected, rel=1e-14)
    assert a == pytest.approx(b, rel=1e-14)


def test_omega_eff_sign():
    assert omega_eff(DriveSpec([1.0], {(-1,): 0.1})) == pytest.approx(-0.01)


def test_drive_validation():
    with pytest.raises(ContractError):
        DriveSpec([1.0, SQRT2], {(0, 0): 0.1, (1, 0): 0.1})
    with pytest.raises(ContractError):
        DriveSpec([1.0], {(1, 0): 0.1})
    assert DriveSpec([1.0], {(1,): 0.0, (2,): 0.1}).coeffs == {(2,): 0.1}
    with pytest.raises(ResonanceError):
        omega_eff(DriveSpec([1.0, 1.0], {(1, -1): 0.1}))


def test_p12_effective():
    assert p12_effective(0.1, 0.0) == 0.0
    assert p12_effective(0.1, math.pi / 0.2) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(p12_effective(0.3, [1.0, 2.0]), np.sin([0.3, 0.6]) ** 2)


def test_curve_table_validation():
    with pytest.raises(ValueError):
        CurveTable(("a", "b"), [[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        CurveTable(("a",), [[np.nan]])


def test_default_grid():
    g = default_grid(fig2_drive())
    assert g.t1 == pytest.approx(math.pi / omega_eff(fig2_drive()))
    assert g.spacing <= 0.5


def test_probability_conservation_and_excited_population():
    drive = fig1b_drive()
    trace = evolve_exact(build_lambda(drive), TimeGrid(0.0, 300.0, 600))
    pops = np.abs(trace.unitaries) ** 2
    # columns of U are normalized states
    assert np.max(np.abs(pops.sum(axis=1) - 1)) <= 1e-10
    # excited-state leakage stays bounded by the drive strength relative to the frequency
    assert np.max(pops[:, 2, 0]) <= 10 * (2 * drive.max_amplitude()) ** 2


def test_residual_peaks_at_drive_frequencies():
    # four effective half-oscillations at 8 samples per unit
    found = {}
    for name, drive in (("1a", fig1a_drive()), ("1b", fig1b_drive())):
        table = run_experiment(LambdaExperiment(drive, default_grid(drive, 4.0, 8)))
        freqs, amp = residual_spectrum(table, min_frequency=0.5)
        found[name] = spectral_peaks(freqs, amp, 3)
    assert abs(found["1a"][0] - 1.0) <= 0.05
    assert any(abs(f - 1.0) <= 0.05 for f in found["1b"])
    assert any(abs(f - SQRT2) <= 0.05 * SQRT2 for f in found["1b"])


def test_weaker_drive_tracks_effective_curve_better():
    def deviation(drive):
        table = run_experiment(LambdaExperiment(drive, default_grid(drive)))
        return np.max(np.abs(table.column("P12_exact") - table.column("P12_eff")))

    assert deviation(fig1b_drive()) >= 1.5 * deviation(fig2_drive())


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.01, 0.2),
    st.floats(-0.2, 0.2),
    st.floats(1.1, 3.0),
)
def test_first_order_vanishes_for_any_zero_mean_drive(a, b, w2):
    drive = DriveSpec([1.0, w2], {(1, 0): a, (0, -1): complex(b, 0.5 * a)})
    series = expand(build_lambda(drive), 2)
    assert np.all(series.terms[0].hq == 0)
    hq2 = series.terms[1].hq
    rate = omega_eff(drive)
    np.testing.assert_allclose(np.linalg.eigvalsh(hq2), [-2 * rate, 0, 2 * rate] if rate >= 0
                               else [2 * rate, 0, -2 * rate], atol=1e-13)


def test_bichromatic_ratio():
    d = bichromatic_drive(0.3, omega1=2.0)
    np.testing.assert_allclose(d.omega, [2.0, 2 * SQRT2])
    assert d.coeffs == {(0, 1): 0.6, (1, 0): 0.6}
