"""Numerical laboratory for fractional nonlinear Schrödinger equations with
power and Hartree nonlinearities on a periodic grid."""

from .exponents import ExistenceWindow, Exponents, compute_exponents, existence_window
from .grid import Field, Grid, make_grid, radial_profile
from .nonlinearity import EquationSpec

__version__ = "0.1.0"

__all__ = [
    "EquationSpec",
    "ExistenceWindow",
    "Exponents",
    "Field",
    "Grid",
    "compute_exponents",
    "existence_window",
    "make_grid",
    "radial_profile",
    "__version__",
]
