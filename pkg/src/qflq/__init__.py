"""Effective Hamiltonians for quasi-periodically driven quantum systems."""

from .errors import (
    AccuracyError,
    ContractError,
    OrderRangeError,
    QflqError,
    ResonanceError,
    StructuralError,
)
from .fourier_op import (
    QPOperator,
    ResonanceReport,
    adjoint,
    average,
    check_resonances,
    combine,
    commutator,
    differentiate,
    evaluate,
    integrate_from_zero,
)
from .magnus import (
    MagnusOrderTerm,
    MagnusSeries,
    bernoulli,
    closed_form_second_order,
    effective_hamiltonian,
    expand,
)
from .propagator import (
    PropagatorTrace,
    TimeGrid,
    evolve_exact,
    matrix_exp_hermitian,
    reconstruct,
    transition_probability,
)
from .sambe import ExtendedOperator, build_extended, propagator_from_extended, quasienergies

__version__ = "0.1.0"
