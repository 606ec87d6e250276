"""Generalized Floquet-Magnus expansion for quasi-periodic Hamiltonians.

The propagator is written as ``U(t) = exp(-i Q(t)) exp(-i H_Q t)`` with a
quasi-periodic Hermitian generator ``Q(t)`` (gauge ``Q(0) = 0``) and a constant
effective Hamiltonian ``H_Q``. Both are expanded order by order,
``H_Q = sum_n H_Q^(n)``, ``Q = sum_n Q^(n)``, and each order follows from

    dQ^(n)/dt = A^(n)(t) - H_Q^(n),

where ``A^(n)`` only involves lower orders. ``H_Q^(n)`` is the average of
``A^(n)`` and ``Q^(n)`` is the zero-at-zero antiderivative of the remainder.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import OrderRangeError, ResonanceError
from .fourier_op import (
    QPOperator,
    average,
    check_resonances,
    commutator,
    default_resonance_threshold,
    integrate_from_zero,
)

K_MAX = 32
DEFAULT_ORDER = 6


@lru_cache(maxsize=None)
def _bernoulli_table(kmax: int) -> tuple[Fraction, ...]:
    # sum_{j<=m} C(m+1, j) B_j = 0 for m >= 1, which gives B_1 = -1/2
    b = [Fraction(1)]
    for m in range(1, kmax + 1):
        acc = Fraction(0)
        binom = 1
        for j in range(m):
            acc += binom * b[j]
            binom = binom * (m + 1 - j) // (j + 1)
        b.append(-acc / (m + 1))
    return tuple(b)


def bernoulli(k: int) -> float:
    """Bernoulli number ``B_k`` with the ``B_1 = -1/2`` convention."""
    if k < 0 or k > K_MAX:
        raise OrderRangeError(f"Bernoulli index {k} outside [0, {K_MAX}]")
    return float(_bernoulli_table(K_MAX)[k])


@dataclass(frozen=True)
class MagnusOrderTerm:
    order: int
    hq: np.ndarray
    q: QPOperator

    @property
    def hq_norm(self) -> float:
        return float(np.linalg.norm(self.hq))


@dataclass(frozen=True)
class MagnusSeries:
    terms: tuple[MagnusOrderTerm, ...]
    input_hash: str
    res_threshold: float

    @property
    def order(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0].q.dim

    @property
    def omega(self) -> np.ndarray:
        return self.terms[0].q.omega

    def hq_norms(self) -> list[float]:
        return [t.hq_norm for t in self.terms]

    def generator(self, upto: int) -> QPOperator:
        """Partial sum ``Q^(1) + ... + Q^(upto)``."""
        _check_upto(self, upto)
        q = QPOperator.zero(self.dim, self.omega)
        for term in self.terms[:upto]:
            q = q + term.q
        return q


def operator_hash(op: QPOperator) -> str:
    """SHA-256 over the frequencies and the coefficients in index order."""
    h = hashlib.sha256()
    h.update(np.asarray(op.omega, dtype="<f8").tobytes())
    h.update(str(op.dim).encode())
    for n, m in op.terms.items():
        h.update(np.asarray(n, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(m, dtype="<c16").tobytes())
    return h.hexdigest()


def _require_nonresonant(H: QPOperator, order: int, res_threshold: float) -> None:
    report = check_resonances(H.support, H.omega, res_threshold, order=order)
    if report.offenders:
        raise ResonanceError(report)


def expand(
    H: QPOperator,
    N: int = DEFAULT_ORDER,
    res_threshold: float | None = None,
) -> MagnusSeries:
    """Compute ``H_Q^(n)`` and ``Q^(n)(t)`` for ``n = 1..N``.

    The recursion works with nested commutators of ``Q``:

        X_0^(1) = H,  X_0^(n) = 0 (n >= 2),  Y_0^(n) = H_Q^(n),
        X_k^(n) = sum_{m=1}^{n-k} [Q^(m), X_{k-1}^(n-m)]   (same for Y),
        A^(n)   = sum_{k=1}^{n-1} B_k/k! (-i)^k (X_k^(n) + (-1)^(k+1) Y_k^(n)).

    Raises:
        OrderRangeError: if ``N < 1``.
        ResonanceError: if any harmonic reachable up to order ``N`` has
            ``|n.omega| < res_threshold``.
    """
    if N < 1:
        raise OrderRangeError(f"expansion order must be >= 1, got {N}")
    if N > K_MAX + 1:
        raise OrderRangeError(f"expansion order {N} exceeds Bernoulli table size")
    if res_threshold is None:
        res_threshold = default_resonance_threshold(H.omega)
    _require_nonresonant(H, N, res_threshold)

    zero = QPOperator.zero(H.dim, H.omega)
    X: dict[tuple[int, int], QPOperator] = {}
    Y: dict[tuple[int, int], QPOperator] = {}
    Q: dict[int, QPOperator] = {}
    terms = []

    for n in range(1, N + 1):
        if n == 1:
            A = H
        else:
            A = zero
            for k in range(1, n):
                xk = zero
                yk = zero
                for m in range(1, n - k + 1):
                    xk = xk + commutator(Q[m], X[(k - 1, n - m)])
                    yk = yk + commutator(Q[m], Y[(k - 1, n - m)])
                X[(k, n)] = xk
                Y[(k, n)] = yk
                coeff = bernoulli(k) / factorial(k) * (-1j) ** k
                A = A + (xk + yk.scale((-1) ** (k + 1))).scale(coeff)
        hq = average(A)
        q = integrate_from_zero(A - QPOperator.constant(hq, H.omega), res_threshold)
        X[(0, n)] = H if n == 1 else zero
        Y[(0, n)] = QPOperator.constant(hq, H.omega)
        Q[n] = q
        terms.append(MagnusOrderTerm(n, hq, q))

    return MagnusSeries(tuple(terms), operator_hash(H), res_threshold)


def _check_upto(series: MagnusSeries, upto: int) -> None:
    if upto < 1 or upto > series.order:
        raise OrderRangeError(f"upto={upto} outside [1, {series.order}]")


def effective_hamiltonian(series: MagnusSeries, upto: int) -> np.ndarray:
    """Partial sum ``H_Q^(1) + ... + H_Q^(upto)``."""
    _check_upto(series, upto)
    return sum((t.hq for t in series.terms[:upto]), np.zeros((series.dim,) * 2, complex))


def closed_form_second_order(H: QPOperator, res_threshold: float | None = None):
    """First two orders from explicit double sums over the Fourier coefficients.

    Independent of :func:`expand`: no commutator recursion, no averaging or
    integration helpers. With ``w_n = n.omega`` and ``e_n = exp(i w_n t)``:

        H_Q^(1) = H_0
        H_Q^(2) = 1/2 sum_n [H_n, H_-n]/w_n + sum_n [H_0, H_n]/w_n
        Q^(1)   = -i sum_n H_n/w_n (e_n - 1)
        Q^(2)   = i sum_n [H_0, H_n]/w_n^2 (e_n - 1)
                  - i/2 sum_{n, m != -n} [H_n, H_m]/(w_n w_{n+m}) (e_{n+m} - 1)
                  + i/2 sum_{n, m} [H_n, H_m]/(w_n w_m) (e_m - 1)

    with all sums over nonzero ``n``, ``m``.

    Returns:
        ``(H_Q1, H_Q2, Q1, Q2)``
    """
    if res_threshold is None:
        res_threshold = default_resonance_threshold(H.omega)
    _require_nonresonant(H, 2, res_threshold)
    zero = H.zero_index()
    dim = H.dim
    H0 = H.term(zero)
    osc = {n: m for n, m in H.terms.items() if n != zero}

    def w(n):
        return H.frequency(n)

    def comm(a, b):
        return a @ b - b @ a

    def neg(n):
        return tuple(-i for i in n)

    def plus(n, m):
        return tuple(i + j for i, j in zip(n, m))

    hq1 = np.array(H0)
    hq2 = np.zeros((dim, dim), dtype=complex)
    for n, Hn in osc.items():
        hq2 += 0.5 * comm(Hn, H.term(neg(n))) / w(n)
        hq2 += comm(H0, Hn) / w(n)

    # accumulate coefficients of (e_k - 1) per harmonic k, then fix the gauge
    q1_c: dict = {}
    for n, Hn in osc.items():
        q1_c[n] = q1_c.get(n, 0) + (-1j) * Hn / w(n)

    q2_c: dict = {}

    def acc(k, mat):
        q2_c[k] = q2_c.get(k, 0) + mat

    for n, Hn in osc.items():
        acc(n, 1j * comm(H0, Hn) / w(n) ** 2)
        for m, Hm in osc.items():
            c = comm(Hn, Hm)
            k = plus(n, m)
            if k != zero:
                acc(k, -0.5j * c / (w(n) * w(k)))
            acc(m, 0.5j * c / (w(n) * w(m)))

    def with_gauge(coeffs):
        out = {k: v for k, v in coeffs.items()}
        out[zero] = -sum(coeffs.values(), np.zeros((dim, dim), dtype=complex))
        return QPOperator(dim, H.omega, out)

    return hq1, hq2, with_gauge(q1_c), with_gauge(q2_c)
