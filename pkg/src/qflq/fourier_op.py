"""Matrix-valued quasi-periodic Fourier polynomials.

A :class:`QPOperator` stores ``H(t) = sum_n H_n exp(i n.omega t)`` as a finite
map from integer multi-indices ``n`` to dense complex matrices. Every operation
returns a new operator; instances are never mutated after construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError, ResonanceError, StructuralError

DROP_THRESHOLD = 1e-14
RESONANCE_RTOL = 1e-9

MultiIndex = tuple[int, ...]


def as_index(n: Iterable[int] | int) -> MultiIndex:
    if isinstance(n, (int, np.integer)):
        return (int(n),)
    return tuple(int(k) for k in n)


def frequency_vector(omega) -> np.ndarray:
    """Validate and freeze a vector of base angular frequencies.

    Entries must be finite and strictly positive. Coincident entries are not
    rejected here: they show up as exact resonances in :func:`check_resonances`.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float)).copy()
    if w.ndim != 1 or w.size == 0:
        raise StructuralError("omega must be a non-empty 1-d vector")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise StructuralError(f"omega entries must be finite and > 0, got {w.tolist()}")
    w.setflags(write=False)
    return w


def default_resonance_threshold(omega) -> float:
    return RESONANCE_RTOL * float(np.max(np.abs(omega)))


def _frozen(mat) -> np.ndarray:
    m = np.array(mat, dtype=complex)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class QPOperator:
    """Finite Fourier series of ``dim x dim`` matrices over ``d`` base frequencies.

    Terms whose Frobenius norm is below ``DROP_THRESHOLD`` are discarded, and
    the remaining ones are kept in lexicographic index order.
    """

    dim: int
    omega: np.ndarray
    terms: Mapping[MultiIndex, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        omega = frequency_vector(self.omega)
        d = omega.size
        clean: dict[MultiIndex, np.ndarray] = {}
        for key, mat in self.terms.items():
            n = as_index(key)
            if len(n) != d:
                raise StructuralError(f"index {n} has length {len(n)}, expected d={d}")
            m = np.asarray(mat, dtype=complex)
            if m.shape != (self.dim, self.dim):
                raise StructuralError(
                    f"term {n} has shape {m.shape}, expected ({self.dim}, {self.dim})"
                )
            if n in clean:
                m = clean[n] + m
            clean[n] = m
        kept = {
            n: _frozen(m)
            for n, m in sorted(clean.items())
            if np.linalg.norm(m) >= DROP_THRESHOLD
        }
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "terms", kept)

    @property
    def d(self) -> int:
        return self.omega.size

    @classmethod
    def zero(cls, dim: int, omega) -> QPOperator:
        return cls(dim, omega, {})

    @classmethod
    def constant(cls, mat, omega) -> QPOperator:
        mat = np.asarray(mat, dtype=complex)
        omega = frequency_vector(omega)
        return cls(mat.shape[0], omega, {(0,) * omega.size: mat})

    def zero_index(self) -> MultiIndex:
        return (0,) * self.d

    def term(self, n) -> np.ndarray:
        """Coefficient matrix at ``n`` (zero matrix when not stored)."""
        n = as_index(n)
        if n in self.terms:
            return self.terms[n]
        return np.zeros((self.dim, self.dim), dtype=complex)

    @property
    def support(self) -> list[MultiIndex]:
        return list(self.terms)

    def frequency(self, n) -> float:
        return float(np.dot(as_index(n), self.omega))

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, t: float) -> np.ndarray:
        return evaluate(self, t)

    def __add__(self, other: QPOperator) -> QPOperator:
        return combine(self, other, "add")

    def __sub__(self, other: QPOperator) -> QPOperator:
        return combine(self, other.scale(-1.0), "add")

    def __matmul__(self, other: QPOperator) -> QPOperator:
        return combine(self, other, "multiply")

    def __neg__(self) -> QPOperator:
        return self.scale(-1.0)

    def scale(self, c: complex) -> QPOperator:
        return QPOperator(self.dim, self.omega, {n: c * m for n, m in self.terms.items()})

    def add_constant(self, mat) -> QPOperator:
        return self + QPOperator.constant(mat, self.omega)

    def max_norm(self) -> float:
        return max((float(np.linalg.norm(m)) for m in self.terms.values()), default=0.0)

    def distance(self, other: QPOperator) -> float:
        """Largest coefficient-wise Frobenius distance to ``other``."""
        _check_compatible(self, other)
        keys = set(self.terms) | set(other.terms)
        return max(
            (float(np.linalg.norm(self.term(n) - other.term(n))) for n in keys),
            default=0.0,
        )

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.distance(adjoint(self)) <= atol

    def __repr__(self) -> str:
        return (
            f"QPOperator(dim={self.dim}, omega={self.omega.tolist()}, "
            f"support={self.support})"
        )


def _check_compatible(a: QPOperator, b: QPOperator) -> None:
    if a.dim != b.dim:
        raise StructuralError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.d != b.d:
        raise StructuralError(f"number of frequencies mismatch: {a.d} vs {b.d}")
    if not np.array_equal(a.omega, b.omega):
        raise StructuralError(
            f"frequency mismatch: {a.omega.tolist()} vs {b.omega.tolist()}"
        )


def evaluate(op: QPOperator, t: float) -> np.ndarray:
    """Return ``sum_n H_n exp(i n.omega t)`` at a single time."""
    out = np.zeros((op.dim, op.dim), dtype=complex)
    for n, m in op.terms.items():
        out += m * np.exp(1j * op.frequency(n) * t)
    return out


def evaluate_many(op: QPOperator, times) -> np.ndarray:
    """Vectorized :func:`evaluate`; returns an array of shape ``(len(times), dim, dim)``."""
    times = np.asarray(times, dtype=float)
    if not op.terms:
        return np.zeros((times.size, op.dim, op.dim), dtype=complex)
    freqs = np.array([op.frequency(n) for n in op.terms])
    mats = np.stack(list(op.terms.values()))
    phases = np.exp(1j * np.outer(times, freqs))
    return np.einsum("tk,kij->tij", phases, mats)


def combine(a: QPOperator, b: QPOperator, kind: str) -> QPOperator:
    """Add or multiply two operators.

    ``multiply`` is the Cauchy product: ``result(k) = sum_{n+m=k} a(n) @ b(m)``.
    """
    _check_compatible(a, b)
    if kind == "add":
        out = dict(a.terms)
        for n, m in b.terms.items():
            out[n] = out[n] + m if n in out else m
        return QPOperator(a.dim, a.omega, out)
    if kind == "multiply":
        out: dict[MultiIndex, np.ndarray] = {}
        for (n, x), (m, y) in itertools.product(a.terms.items(), b.terms.items()):
            k = tuple(i + j for i, j in zip(n, m))
            prod = x @ y
            out[k] = out[k] + prod if k in out else prod
        return QPOperator(a.dim, a.omega, out)
    raise ValueError(f"unknown combine kind {kind!r}")


def commutator(a: QPOperator, b: QPOperator) -> QPOperator:
    _check_compatible(a, b)
    out: dict[MultiIndex, np.ndarray] = {}
    for (n, x), (m, y) in itertools.product(a.terms.items(), b.terms.items()):
        k = tuple(i + j for i, j in zip(n, m))
        c = x @ y - y @ x
        out[k] = out[k] + c if k in out else c
    return QPOperator(a.dim, a.omega, out)


def adjoint(op: QPOperator) -> QPOperator:
    """Pointwise conjugate transpose: ``result(n) = op(-n)^dagger``."""
    return QPOperator(
        op.dim,
        op.omega,
        {tuple(-i for i in n): m.conj().T for n, m in op.terms.items()},
    )


def average(op: QPOperator) -> np.ndarray:
    """Long-time average, i.e. the zero-harmonic coefficient."""
    return np.array(op.term(op.zero_index()))


def differentiate(op: QPOperator) -> QPOperator:
    return QPOperator(
        op.dim,
        op.omega,
        {n: 1j * op.frequency(n) * m for n, m in op.terms.items()},
    )


def integrate_from_zero(
    op: QPOperator,
    res_threshold: float | None = None,
    avg_atol: float = 1e-12,
) -> QPOperator:
    """Antiderivative ``P`` of a zero-average operator with ``P(0) = 0``.

    Raises:
        ContractError: if the zero-harmonic coefficient is not negligible.
        ResonanceError: if some stored ``|n.omega|`` is below ``res_threshold``.
    """
    if res_threshold is None:
        res_threshold = default_resonance_threshold(op.omega)
    zero = op.zero_index()
    scale = max(op.max_norm(), 1.0)
    if zero in op.terms and np.linalg.norm(op.terms[zero]) > avg_atol * scale:
        raise ContractError(
            "integrate_from_zero needs a zero-average operator; "
            f"|average| = {np.linalg.norm(op.terms[zero]):.3e}"
        )
    report = check_resonances(op.support, op.omega, res_threshold, order=1)
    if report.offenders:
        raise ResonanceError(report)
    out: dict[MultiIndex, np.ndarray] = {}
    const = np.zeros((op.dim, op.dim), dtype=complex)
    for n, m in op.terms.items():
        if n == zero:
            continue
        c = m / (1j * op.frequency(n))
        out[n] = c
        const -= c
    out[zero] = const
    return QPOperator(op.dim, op.omega, out)


@dataclass(frozen=True)
class ResonanceReport:
    """Harmonics ``n`` with ``|n.omega|`` below ``threshold``, smallest first."""

    offenders: list[tuple[MultiIndex, float]]
    threshold: float

    def __bool__(self) -> bool:
        return bool(self.offenders)

    def __str__(self) -> str:
        if not self.offenders:
            return f"no resonances below {self.threshold:.3e}"
        lines = [f"{len(self.offenders)} small divisor(s) below {self.threshold:.3e}:"]
        lines += [f"  n={list(n)}  n.omega={v:.3e}" for n, v in self.offenders]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "offenders": [{"index": list(n), "value": v} for n, v in self.offenders],
        }


def index_closure(support: Iterable, d: int, order: int) -> set[MultiIndex]:
    """All sums of at most ``order`` elements of ``support``."""
    base = {as_index(n) for n in support} | {(0,) * d}
    layer = set(base)
    for _ in range(order - 1):
        layer = {tuple(i + j for i, j in zip(a, b)) for a in layer for b in base}
    return layer


def check_resonances(support, omega, threshold: float, order: int = 1) -> ResonanceReport:
    """List every nonzero ``n`` reachable at the given expansion order with a small divisor."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    zero = (0,) * w.size
    offenders = []
    for n in index_closure(support, w.size, order):
        if n == zero:
            continue
        v = float(np.dot(n, w))
        if abs(v) < threshold:
            offenders.append((n, v))
    offenders.sort(key=lambda item: (abs(item[1]), item[0]))
    return ResonanceReport(offenders, threshold)
