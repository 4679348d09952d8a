"""Time-dependent Dyson maps for two coupled non-Hermitian oscillators.

Modules
-------
operator_algebra
    The four-generator algebra and truncated Fock representations.
coefficient_functions
    Time-dependent coefficient catalogue and quadrature.
perturbation_engine
    Perturbative commutator equations and order-by-order ODE chains.
exact_maps
    Catalogue of exact maps built from auxiliary functions.
verification
    Matrix-level residuals of the time-dependent Dyson relations.
observables
    Oscillator eigenfunctions and instantaneous energies.
quartic
    Exact map for the unstable quartic oscillator.
"""

from .coefficient_functions import CoeffFn, TimeGrid, from_name
from .errors import (ConditioningError, ConfigError, DegenerateConstantError, DomainError,
                     DysonError, ExceptionalPointError, IntegrationError, QuadratureError,
                     SingularConfigurationError, UnsatisfiableError)
from .exact_maps import DysonCase, ExactMap, catalogue_rows
from .operator_algebra import KVector, MatrixRep, build_fock_rep_1mode, build_fock_rep_2mode, verify_algebra

__version__ = "0.1.0"

__all__ = [
    "CoeffFn", "TimeGrid", "from_name",
    "ConditioningError", "ConfigError", "DegenerateConstantError", "DomainError", "DysonError",
    "ExceptionalPointError", "IntegrationError", "QuadratureError", "SingularConfigurationError",
    "UnsatisfiableError",
    "DysonCase", "ExactMap", "catalogue_rows",
    "KVector", "MatrixRep", "build_fock_rep_1mode", "build_fock_rep_2mode", "verify_algebra",
]
