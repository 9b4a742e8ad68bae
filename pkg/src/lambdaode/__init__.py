"""Calculus and linear ODEs for functions valued in Banach modules over finite-dimensional algebras."""

__version__ = "0.1.0"

from .algebra import FiniteDimAlgebra, check_axioms, preset
from .calculus import Curve, differentiate, ftc_roundtrip, integrate, variable_upper_integral
from .module import BanachModule, check_sigma_normed, decompose
from .ode import IVP, HigherOrderODE, LinearODE, picard_solve, reduce_order, residuals, uniqueness_check
from .solspace import decompose_solution_space, solution_basis
from .stepfn import Partition, VGridFunction, VStepFunction

__all__ = [
    "FiniteDimAlgebra", "check_axioms", "preset",
    "BanachModule", "check_sigma_normed", "decompose",
    "Curve", "integrate", "variable_upper_integral", "differentiate", "ftc_roundtrip",
    "IVP", "LinearODE", "HigherOrderODE", "picard_solve", "reduce_order", "residuals", "uniqueness_check",
    "solution_basis", "decompose_solution_space",
    "Partition", "VStepFunction", "VGridFunction",
]
