"""Truncated extended-space (Sambe) operator.

The quasi-periodic Schroedinger operator ``H(t) - i d/dt`` becomes the static
matrix ``K = sum_n H_n (x) sigma_n + 1 (x) n.omega`` on ``C^dim (x) l2(Z^d)``,
where ``sigma_n |m> = |m + n>``. Harmonics are truncated to the box
``max_i |n_i| <= M``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import ContractError, OrderRangeError
from .fourier_op import MultiIndex, QPOperator


@dataclass(frozen=True, eq=False)
class ExtendedOperator:
    dim: int
    cutoff: int
    omega: np.ndarray
    indices: tuple[MultiIndex, ...]
    matrix: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.omega.size

    @cached_property
    def position(self) -> dict[MultiIndex, int]:
        return {n: k for k, n in enumerate(self.indices)}

    def block(self, row: MultiIndex, col: MultiIndex) -> np.ndarray:
        i = self.position[tuple(row)] * self.dim
        j = self.position[tuple(col)] * self.dim
        return self.matrix[i : i + self.dim, j : j + self.dim]

    def hermiticity_error(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= atol * max(1.0, np.linalg.norm(self.matrix))

    @cached_property
    def _eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(0.5 * (self.matrix + self.matrix.conj().T))


def box_indices(d: int, cutoff: int) -> tuple[MultiIndex, ...]:
    """All ``n`` with ``max |n_i| <= cutoff`` in lexicographic order."""
    return tuple(itertools.product(range(-cutoff, cutoff + 1), repeat=d))


def build_extended(H: QPOperator, M: int) -> ExtendedOperator:
    """Assemble the truncated extended operator with ``(2M+1)^d`` harmonic blocks.

    Raises:
        OrderRangeError: if some stored harmonic of ``H`` lies outside the box.
    """
    reach = max((max(abs(i) for i in n) for n in H.terms), default=0)
    if M < reach:
        raise OrderRangeError(f"cutoff M={M} smaller than the drive support reach {reach}")
    indices = box_indices(H.d, M)
    pos = {n: k for k, n in enumerate(indices)}
    dim = H.dim
    K = np.zeros((len(indices) * dim,) * 2, dtype=complex)
    for m, col in pos.items():
        for n, mat in H.terms.items():
            target = tuple(a + b for a, b in zip(m, n))
            row = pos.get(target)
            if row is not None:
                K[row * dim : (row + 1) * dim, col * dim : (col + 1) * dim] += mat
        shift = float(np.dot(m, H.omega))
        K[col * dim : (col + 1) * dim, col * dim : (col + 1) * dim] += shift * np.eye(dim)
    return ExtendedOperator(dim, M, H.omega, indices, K)


def _column_weights(K: ExtendedOperator, times: np.ndarray) -> np.ndarray:
    freqs = [float(np.dot(n, K.omega)) for n in K.indices]
    return np.exp(1j * np.outer(times, freqs))


def propagators_from_extended(K: ExtendedOperator, times, origin=None) -> np.ndarray:
    """``U(t) = sum_n exp(i n.omega t) <n| exp(-i K t) |origin>`` for each time.

    ``origin`` defaults to the zero harmonic. Any other block inside the box
    gives the same propagator up to truncation error, since shifting the
    ladder by ``m`` only multiplies the column by ``exp(-i m.omega t)``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    dim = K.dim
    nblocks = len(K.indices)
    origin = (0,) * K.d if origin is None else tuple(origin)
    if origin not in K.position:
        raise OrderRangeError(f"origin {list(origin)} outside the cutoff box")
    c0 = K.position[origin] * dim
    out = np.empty((times.size, dim, dim), dtype=complex)
    phases = _column_weights(K, times)
    if K.is_hermitian():
        w, v = K._eigh
        v0 = v[c0 : c0 + dim, :].conj().T
        for k, t in enumerate(times):
            col = (v * np.exp(-1j * w * t)) @ v0
            out[k] = np.einsum("b,bij->ij", phases[k], col.reshape(nblocks, dim, dim))
    else:
        for k, t in enumerate(times):
            col = scipy.linalg.expm(-1j * t * K.matrix)[:, c0 : c0 + dim]
            out[k] = np.einsum("b,bij->ij", phases[k], col.reshape(nblocks, dim, dim))
    return out


def propagator_from_extended(K: ExtendedOperator, t: float) -> np.ndarray:
    """Single-time version of :func:`propagators_from_extended`.

    At finite cutoff the result is only approximately unitary.
    """
    return propagators_from_extended(K, [t])[0]


def quasienergies(K: ExtendedOperator) -> np.ndarray:
    """Ascending eigenvalues of the truncated matrix. No folding is applied."""
    if not K.is_hermitian():
        raise ContractError(
            f"extended operator is not Hermitian (|K - K^dagger|_F = {K.hermiticity_error():.3e})"
        )
    return K._eigh[0].copy()


def dominant_harmonics(K: ExtendedOperator) -> tuple[np.ndarray, list[MultiIndex], np.ndarray]:
    """Eigenvalues with the harmonic block carrying most of each eigenvector's weight.

    Returns ``(eigenvalues, dominant_index, weight_outside_inner_half)``; the
    last entry is the eigenvector norm on blocks with ``max |n_i| > M // 2`` and
    flags states leaning on the truncation edge.
    """
    if not K.is_hermitian():
        raise ContractError("extended operator is not Hermitian")
    w, v = K._eigh
    nblocks = len(K.indices)
    weights = np.sum(np.abs(v.reshape(nblocks, K.dim, -1)) ** 2, axis=1)
    dominant = [K.indices[k] for k in np.argmax(weights, axis=0)]
    outer = np.array([max(abs(i) for i in n) > K.cutoff // 2 for n in K.indices])
    edge = weights[outer].sum(axis=0)
    return w.copy(), dominant, edge


def central_quasienergies(K: ExtendedOperator, radius: int = 0) -> np.ndarray:
    """Eigenvalues whose eigenvector is dominated by a block with ``max |n_i| <= radius``."""
    w, dominant, _ = dominant_harmonics(K)
    keep = [max(abs(i) for i in n) <= radius for n in dominant]
    return w[np.array(keep, dtype=bool)]


def match_modulo_lattice(
    targets, spectrum, omega, shift_radius: int
) -> list[tuple[float, float, MultiIndex]]:
    """For each target energy, the closest ``lam - n.omega`` over the spectrum.

    ``n`` ranges over the box ``max |n_i| <= shift_radius``. Returns
    ``(target, distance, n)`` triples.
    """
    omega = np.asarray(omega, dtype=float)
    shifts = box_indices(omega.size, shift_radius)
    lattice = np.array([float(np.dot(n, omega)) for n in shifts])
    spectrum = np.asarray(spectrum, dtype=float)
    out = []
    for e in np.atleast_1d(targets):
        dist = np.abs(spectrum[:, None] - lattice[None, :] - e)
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        out.append((float(e), float(dist[i, j]), shifts[j]))
    return out
