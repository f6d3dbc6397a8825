"""Equilibrium states of subshifts of finite type as limits of weighted
empirical measures on separated sets, with the finite-state Markov analog."""

from pressurelab.errors import ConvergenceError, ValidationError
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    SymbolicPoint,
    admissible_words,
    birkhoff_sum,
    bowen_distance,
    canonical_extension,
    periodic_points,
)

__all__ = [
    "ConvergenceError",
    "LocallyConstantPotential",
    "SubshiftSystem",
    "SymbolicPoint",
    "ValidationError",
    "admissible_words",
    "birkhoff_sum",
    "bowen_distance",
    "canonical_extension",
    "periodic_points",
]

__version__ = "0.1.0"
