"""Reference and effective time evolution.

``evolve_exact`` integrates ``i dU/dt = H(t) U`` with classic fixed-step RK4
and is the oracle the expansion and the extended-space construction are
checked against. ``reconstruct`` assembles ``exp(-i Q(t)) exp(-i H_Q t)`` from
a truncated :class:`~qflq.magnus.MagnusSeries`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ContractError, OrderRangeError
from .fourier_op import QPOperator, evaluate_many
from .magnus import MagnusSeries, _check_upto, effective_hamiltonian

STEPS_PER_PERIOD = 400
DEFAULT_TOL = 1e-8
# upper bound on complex entries held per batch of RK4 step matrices
_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)):
            raise ValueError("grid end points must be finite")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.t1 > self.t0:
            raise ValueError(f"need t1 > t0, got [{self.t0}, {self.t1}]")

    @property
    def spacing(self) -> float:
        return (self.t1 - self.t0) / self.steps

    def times(self) -> np.ndarray:
        return self.t0 + self.spacing * np.arange(self.steps + 1)


@dataclass(frozen=True)
class PropagatorTrace:
    times: np.ndarray
    unitaries: np.ndarray
    step: float
    self_check_deviation: float = float("nan")

    def unitarity_residuals(self) -> np.ndarray:
        eye = np.eye(self.unitaries.shape[-1])
        prod = np.conj(np.swapaxes(self.unitaries, -1, -2)) @ self.unitaries
        return np.linalg.norm(prod - eye, axis=(-2, -1))


def fastest_rate(H: QPOperator) -> float:
    """Largest angular rate in the problem: drive harmonics or coupling strength."""
    freq = max((abs(H.frequency(n)) for n in H.terms), default=0.0)
    coupling = sum(np.linalg.norm(m, 2) for m in H.terms.values())
    return max(freq, coupling)


def default_substeps(H: QPOperator, grid: TimeGrid) -> int:
    """RK4 substeps per output interval: ``STEPS_PER_PERIOD`` per fastest period."""
    rate = fastest_rate(H)
    if rate == 0.0:
        return 1
    h = 2 * math.pi / rate / STEPS_PER_PERIOD
    return max(1, math.ceil(grid.spacing / h - 1e-9))


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _step_matrices(H: QPOperator, starts: np.ndarray, h: float) -> np.ndarray:
    """Batched RK4 one-step maps for ``dU/dt = -i H(t) U``, polar-projected.

    RK4 on a linear ODE advances ``U -> R U`` with ``R`` independent of ``U``,
    and ``polar(R U) = polar(R) U`` for unitary ``U``; so projecting each ``R``
    equals re-unitarizing the state after every step.
    """
    a1 = -1j * evaluate_many(H, starts)
    a2 = -1j * evaluate_many(H, starts + 0.5 * h)
    a3 = -1j * evaluate_many(H, starts + h)
    eye = np.eye(H.dim)
    k2 = a2 + 0.5 * h * (a2 @ a1)
    k3 = a2 + 0.5 * h * (a2 @ k2)
    k4 = a3 + h * (a3 @ k3)
    r = eye + (h / 6.0) * (a1 + 2 * k2 + 2 * k3 + k4)
    return _polar_unitary(r)


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[..., -1, :, :] @ ... @ mats[..., 0, :, :]`` by pairwise reduction."""
    while mats.shape[-3] > 1:
        if mats.shape[-3] % 2:
            pad = np.broadcast_to(np.eye(mats.shape[-1]), mats.shape[:-3] + (1,) + mats.shape[-2:])
            mats = np.concatenate([mats, pad], axis=-3)
        mats = mats[..., 1::2, :, :] @ mats[..., 0::2, :, :]
    return mats[..., 0, :, :]


def _integrate(H: QPOperator, grid: TimeGrid, substeps: int) -> np.ndarray:
    times = grid.times()
    h = grid.spacing / substeps
    dim = H.dim
    out = np.empty((times.size, dim, dim), dtype=complex)
    out[0] = np.eye(dim)
    per_interval = substeps * dim * dim * 8
    chunk = max(1, _CHUNK_ENTRIES // per_interval)
    u = out[0]
    for lo in range(0, grid.steps, chunk):
        hi = min(grid.steps, lo + chunk)
        starts = times[lo:hi, None] + h * np.arange(substeps)[None, :]
        steps = _step_matrices(H, starts.ravel(), h).reshape(hi - lo, substeps, dim, dim)
        blocks = _ordered_product(steps)
        for j in range(hi - lo):
            u = _polar_unitary(blocks[j] @ u)
            out[lo + j + 1] = u
    return out


def evolve_exact(
    H: QPOperator,
    grid: TimeGrid,
    substeps: int | None = None,
    tol: float = DEFAULT_TOL,
    self_check: bool = True,
) -> PropagatorTrace:
    """Propagator ``U(t, t0)`` on every grid point, starting from the identity.

    Fixed-step RK4 with ``substeps`` steps per grid interval (default from
    :func:`default_substeps`), re-unitarized after every step.

    Raises:
        AccuracyError: if ``self_check`` is on and a rerun with twice as many
            steps moves some ``U(t_k)`` by ``tol`` or more (Frobenius).
    """
    if substeps is None:
        substeps = default_substeps(H, grid)
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    us = _integrate(H, grid, substeps)
    deviation = float("nan")
    if self_check:
        fine = _integrate(H, grid, 2 * substeps)
        deviation = float(np.max(np.linalg.norm(fine - us, axis=(-2, -1))))
        if not deviation < tol:
            raise AccuracyError(
                f"step-halving check failed: max deviation {deviation:.3e} >= {tol:.1e} "
                f"with {substeps} substeps per interval; use a smaller step",
                deviation,
            )
    return PropagatorTrace(grid.times(), us, grid.spacing / substeps, deviation)


def matrix_exp_hermitian(hmat, t: float, atol: float = 1e-12) -> np.ndarray:
    """``exp(-i hmat t)`` through the spectral decomposition of a Hermitian matrix."""
    hmat = np.asarray(hmat, dtype=complex)
    skew = np.linalg.norm(hmat - hmat.conj().T)
    if skew > atol * max(1.0, np.linalg.norm(hmat)):
        raise ContractError(f"matrix is not Hermitian: |H - H^dagger|_F = {skew:.3e}")
    w, v = np.linalg.eigh(0.5 * (hmat + hmat.conj().T))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def reconstruct(series: MagnusSeries, upto: int, t: float) -> np.ndarray:
    """Truncated decomposition ``exp(-i Q(t)) exp(-i H_Q t)``."""
    _check_upto(series, upto)
    q = series.generator(upto)(t)
    hq = effective_hamiltonian(series, upto)
    try:
        fast = matrix_exp_hermitian(q, 1.0, atol=1e-10)
        slow = matrix_exp_hermitian(hq, t, atol=1e-10)
    except ContractError as exc:
        raise ContractError(f"generator is not Hermitian at t={t}: {exc}") from exc
    return fast @ slow


def transition_probability(U, i: int, j: int) -> float:
    """``|<i|U|j>|^2`` for zero-based basis indices."""
    U = np.asarray(U)
    n = U.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise OrderRangeError(f"basis index ({i}, {j}) outside dimension {n}")
    return float(abs(U[i, j]) ** 2)
