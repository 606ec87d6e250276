import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qflq.fourier_op import QPOperator, evaluate

# scripts/ holds the golden-file generator shared by tests
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

SQRT2 = math.sqrt(2.0)


def random_matrix(rng, dim, scale=1.0):
    return scale * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))


def random_qp(rng, dim, omega, nterms=3, reach=2, hermitian=True, constant=True, scale=0.3):
    """Random finite Fourier operator; Hermitian-as-a-function on request."""
    d = len(omega)
    terms = {}
    for _ in range(nterms):
        n = tuple(int(k) for k in rng.integers(-reach, reach + 1, size=d))
        if not any(n):
            continue
        a = random_matrix(rng, dim, scale)
        terms[n] = terms.get(n, 0) + a
        if hermitian:
            neg = tuple(-k for k in n)
            terms[neg] = terms.get(neg, 0) + a.conj().T
    if constant:
        a = random_matrix(rng, dim, scale)
        terms[(0,) * d] = 0.5 * (a + a.conj().T) if hermitian else a
    return QPOperator(dim, omega, terms)


def exact_propagator(H: QPOperator, t: float, t0: float = 0.0) -> np.ndarray:
    """Independent oracle: adaptive DOP853 at tight tolerances."""
    dim = H.dim

    def rhs(s, y):
        return (-1j * evaluate(H, s) @ y.reshape(dim, dim)).ravel()

    sol = solve_ivp(
        rhs, (t0, t), np.eye(dim, dtype=complex).ravel(), method="DOP853", rtol=1e-13, atol=1e-15
    )
    return sol.y[:, -1].reshape(dim, dim)


OMEGAS = {1: [1.0], 2: [1.0, SQRT2], 3: [1.0, SQRT2, math.sqrt(5.0)]}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
