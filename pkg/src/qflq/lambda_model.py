"""Driven three-level Lambda system and the exact-vs-effective comparison.

Ground states ``|1>, |2>`` (indices 0, 1) couple to the excited state ``|3>``
(index 2) through ``H(t) = f(t) |3>(<1| + <2|) + h.c.`` with a quasi-periodic,
zero-mean drive ``f(t) = sum_n f_n exp(i n.omega t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ResonanceError
from .fourier_op import (
    MultiIndex,
    QPOperator,
    as_index,
    check_resonances,
    default_resonance_threshold,
    frequency_vector,
)
from .propagator import TimeGrid, evolve_exact

SQRT2 = math.sqrt(2.0)

# |3>(<1| + <2|)
_RAISE = np.zeros((3, 3), dtype=complex)
_RAISE[2, 0] = _RAISE[2, 1] = 1.0


@dataclass(frozen=True)
class DriveSpec:
    omega: np.ndarray
    coeffs: dict[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        omega = frequency_vector(self.omega)
        coeffs = {}
        for n, f in sorted((as_index(k), complex(v)) for k, v in self.coeffs.items()):
            if len(n) != omega.size:
                raise ContractError(f"drive index {n} does not match d={omega.size}")
            if f != 0:
                coeffs[n] = f
        if any(all(i == 0 for i in n) for n in coeffs):
            raise ContractError("the static drive component f_0 must vanish")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def d(self) -> int:
        return self.omega.size

    def max_amplitude(self) -> float:
        return max((abs(f) for f in self.coeffs.values()), default=0.0)


def fig1a_drive(omega1: float = 1.0) -> DriveSpec:
    """Periodic drive ``f = Omega exp(i w1 t)``, ``Omega/w1 = 0.1 sqrt(1 + sqrt2/2)``."""
    amp = 0.1 * math.sqrt(1 + SQRT2 / 2) * omega1
    return DriveSpec([omega1], {(1,): amp})


def bichromatic_drive(ratio: float, omega1: float = 1.0) -> DriveSpec:
    """``f = Omega (exp(i w1 t) + exp(i sqrt2 w1 t))`` with ``Omega = ratio * w1``."""
    amp = ratio * omega1
    return DriveSpec([omega1, SQRT2 * omega1], {(1, 0): amp, (0, 1): amp})


def fig1b_drive(omega1: float = 1.0) -> DriveSpec:
    return bichromatic_drive(0.1, omega1)


def fig2_drive(omega1: float = 1.0) -> DriveSpec:
    return bichromatic_drive(0.05, omega1)


def build_lambda(drive: DriveSpec) -> QPOperator:
    """Hermitian-as-a-function operator for ``f(t)|3>(<1|+<2|) + h.c.``."""
    terms: dict[MultiIndex, np.ndarray] = {}
    lower = _RAISE.conj().T
    for n, f in drive.coeffs.items():
        neg = tuple(-i for i in n)
        terms[n] = terms.get(n, 0) + f * _RAISE
        terms[neg] = terms.get(neg, 0) + np.conj(f) * lower
    return QPOperator(3, drive.omega, terms)


def omega_eff(drive: DriveSpec, res_threshold: float | None = None) -> float:
    """Effective ground-state coupling ``sum_n |f_n|^2 / (n.omega)``."""
    if res_threshold is None:
        res_threshold = default_resonance_threshold(drive.omega)
    report = check_resonances(drive.coeffs, drive.omega, res_threshold, order=1)
    if report.offenders:
        raise ResonanceError(report)
    return math.fsum(abs(f) ** 2 / float(np.dot(n, drive.omega)) for n, f in drive.coeffs.items())


def effective_lambda_hamiltonian(rate: float) -> np.ndarray:
    """Second-order effective Hamiltonian ``-rate ((|1>+|2>)(<1|+<2|) - 2|3><3|)``."""
    return -rate * np.array([[1, 1, 0], [1, 1, 0], [0, 0, -2]], dtype=complex)


def p12_effective(rate: float, t):
    return np.sin(rate * np.asarray(t)) ** 2


@dataclass(frozen=True)
class CurveTable:
    header: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.header):
            raise ValueError(f"rows of shape {rows.shape} do not match header {self.header}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("curve table contains non-finite values")
        object.__setattr__(self, "rows", rows)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.header.index(name)]


@dataclass(frozen=True)
class LambdaExperiment:
    drive: DriveSpec
    grid: TimeGrid
    substeps: int | None = None


def default_grid(drive: DriveSpec, periods: float = 1.0, samples_per_unit: int = 2) -> TimeGrid:
    """Grid from 0 to ``periods`` effective half-oscillations ``pi / Omega_eff``."""
    t1 = periods * math.pi / abs(omega_eff(drive))
    steps = max(1, math.ceil(t1 * samples_per_unit))
    return TimeGrid(0.0, t1, steps)


def exact_trace(exp: LambdaExperiment):
    return evolve_exact(build_lambda(exp.drive), exp.grid, substeps=exp.substeps)


def run_experiment(exp: LambdaExperiment, trace=None) -> CurveTable:
    """Columns ``t, P12_exact, P12_eff`` on the experiment grid."""
    if trace is None:
        trace = exact_trace(exp)
    rate = omega_eff(exp.drive)
    p_exact = np.abs(trace.unitaries[:, 0, 1]) ** 2
    p_eff = p12_effective(rate, trace.times)
    return CurveTable(("t", "P12_exact", "P12_eff"), np.column_stack([trace.times, p_exact, p_eff]))


def residual_spectrum(table: CurveTable, min_frequency: float = 0.0):
    """One-sided amplitude spectrum of ``P12_exact - P12_eff`` (angular frequencies).

    The mean and a linear trend are removed and a Hann window applied before
    the transform; bins below ``min_frequency`` are dropped.
    """
    t = table.column("t")
    r = table.column("P12_exact") - table.column("P12_eff")
    r = r - np.polyval(np.polyfit(t, r, 1), t)
    r = r * np.hanning(r.size)
    dt = t[1] - t[0]
    amp = np.abs(np.fft.rfft(r))
    freqs = 2 * np.pi * np.fft.rfftfreq(r.size, dt)
    keep = freqs >= min_frequency
    return freqs[keep], amp[keep]


def spectral_peaks(freqs: np.ndarray, amp: np.ndarray, count: int) -> np.ndarray:
    """Frequencies of the ``count`` largest local maxima, strongest first."""
    inner = (amp[1:-1] > amp[:-2]) & (amp[1:-1] >= amp[2:])
    idx = np.nonzero(inner)[0] + 1
    idx = idx[np.argsort(amp[idx])[::-1]][:count]
    return freqs[idx]
