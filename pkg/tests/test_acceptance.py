"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import math
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, OMEGAS, random_qp
from qflq.fourier_op import QPOperator
from qflq.lambda_model import (
    LambdaExperiment,
    build_lambda,
    default_grid,
    fig1a_drive,
    fig1b_drive,
    fig2_drive,
    omega_eff,
    run_experiment,
)
from qflq.magnus import closed_form_second_order, effective_hamiltonian, expand
from qflq.propagator import TimeGrid, evolve_exact, reconstruct
from qflq.sambe import (
    build_extended,
    central_quasienergies,
    match_modulo_lattice,
    propagators_from_extended,
)
from regen_golden import regenerate

GOLDEN = Path(__file__).parent / "golden"


def verdict(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fig_runs():
    out = {}
    for name, drive in (("fig2", fig2_drive()), ("fig1b", fig1b_drive())):
        exp = LambdaExperiment(drive, default_grid(drive))
        trace = evolve_exact(build_lambda(drive), exp.grid)
        out[name] = (trace, run_experiment(exp, trace))
    return out


def test_criterion_1_effective_rate_equality():
    a, b = omega_eff(fig1a_drive()), omega_eff(fig1b_drive())
    expected = 0.01 * (1 + math.sqrt(2) / 2)
    rel = max(abs(a - b) / abs(b), abs(a - expected) / expected, abs(b - expected) / expected)
    verdict(1, rel <= 1e-14, f"Omega_eff 1a={a!r} 1b={b!r} max rel dev={rel:.2e} (tol 1e-14)")


def test_criterion_2_order_two_oracle():
    worst, count = 0.0, 0
    for d in (1, 2, 3):
        for dim in (2, 3, 4):
            rng = np.random.default_rng(97 * d + dim)
            for _ in range(6):
                H = random_qp(rng, dim, OMEGAS[d], nterms=int(rng.integers(1, 5)))
                series = expand(H, 2)
                hq1, hq2, q1, q2 = closed_form_second_order(H)
                worst = max(
                    worst,
                    np.abs(series.terms[0].hq - hq1).max(),
                    np.abs(series.terms[1].hq - hq2).max(),
                    series.terms[0].q.distance(q1),
                    series.terms[1].q.distance(q2),
                )
                count += 1
    verdict(2, count >= 50 and worst <= 1e-12, f"{count} drives, max coefficient dev={worst:.2e} (tol 1e-12)")


def test_criterion_3_effective_dynamics_fidelity(fig_runs):
    dev = {}
    for name, (_, table) in fig_runs.items():
        dev[name] = float(np.max(np.abs(table.column("P12_exact") - table.column("P12_eff"))))
    ratio = dev["fig1b"] / dev["fig2"]
    ok = dev["fig2"] <= 0.05 and ratio >= 1.5
    verdict(3, ok, f"max|P12-sin^2| fig2={dev['fig2']:.4f} (tol 0.05), fig1b/fig2 ratio={ratio:.2f} (min 1.5)")


def test_criterion_4_small_time_convergence_order():
    H = build_lambda(fig2_drive())
    series = expand(H, 2)
    ts = np.logspace(-3, -1, 9)
    exact = [evolve_exact(H, TimeGrid(0.0, t, 1)).unitaries[-1] for t in ts]
    slopes = {}
    for N in (1, 2):
        errs = [np.linalg.norm(u - reconstruct(series, N, t)) for u, t in zip(exact, ts)]
        slopes[N] = float(np.polyfit(np.log(ts), np.log(errs), 1)[0])
    ok = all(slopes[N] >= N + 0.5 for N in (1, 2))
    verdict(4, ok, f"log-log slopes N=1: {slopes[1]:.2f} (min 1.5), N=2: {slopes[2]:.2f} (min 2.5)")


def test_criterion_5_sambe_cross_check():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    H = QPOperator(2, [1.0], {(0,): 0.1 * sz, (1,): 0.05 * sx, (-1,): 0.05 * sx})
    grid = TimeGrid(0.0, 50.0, 200)
    ref = evolve_exact(H, grid).unitaries
    errs = []
    for M in (4, 8, 16):
        U = propagators_from_extended(build_extended(H, M), grid.times())
        errs.append(float(np.max(np.linalg.norm(U - ref, axis=(1, 2)))))
    monotone = all(b <= 1.2 * a for a, b in zip(errs, errs[1:]))
    ok = errs[-1] <= 1e-6 and monotone
    verdict(5, ok, "max|U_sambe-U_ode|_F M=4,8,16: " + ", ".join(f"{e:.2e}" for e in errs) + " (tol 1e-6)")


def test_criterion_6_unitarity_and_conservation(fig_runs):
    drive = fig2_drive()
    full = evolve_exact(build_lambda(drive), TimeGrid(0.0, 1200.0, 2400))
    traces = [full] + [trace for trace, _ in fig_runs.values()]
    unit = max(float(t.unitarity_residuals().max()) for t in traces)
    cons = max(float(np.max(np.abs(np.sum(np.abs(t.unitaries) ** 2, axis=1) - 1))) for t in traces)
    ok = unit <= 1e-10 and cons <= 1e-10
    verdict(6, ok, f"max|U^dag U-1|_F={unit:.2e}, max column-probability dev={cons:.2e} (tol 1e-10)")


def test_criterion_7_quasienergy_proxy():
    drive = fig2_drive()
    H = build_lambda(drive)
    targets = np.linalg.eigvalsh(effective_hamiltonian(expand(H, 2), 2))
    central = central_quasienergies(build_extended(H, 8))
    matches = match_modulo_lattice(targets, central, drive.omega, 2)
    worst = max(dist for _, dist, _ in matches)
    verdict(7, worst <= 2e-3, f"H_Q2 eigenvalues {np.round(targets, 6).tolist()}, worst match {worst:.2e} (tol 2e-3)")


def test_criterion_8_golden_reproducibility(tmp_path):
    written = regenerate(tmp_path)
    mismatched = [p.name for p in written if p.read_bytes() != (GOLDEN / p.name).read_bytes()]
    verdict(8, not mismatched, f"{len(written)} golden files, mismatched: {mismatched or 'none'}")
