"""Half-eigenvalues and the Fucik spectrum of -u'' = a m u+ - b n u- on an interval."""

from .eigen import HalfEigenvalue, const_eigenvalue, eigenvalue, harmonic_weight, linear_eigenvalue
from .expr import WeightExpr, WeightError, constant, parse
from .prufer import DIRICHLET, NEUMANN, Problem, ToleranceConfig, integrate_angle, reconstruct_eigenfunction
from .spectral import (
    asymptotic_count,
    asymptotic_eigenvalue,
    bracketing_counts,
    bracketing_defect,
    campanato_seminorm,
    count,
    remainder_rate,
    trace_curve,
    weyl_integral,
)

__version__ = "0.1.0"

__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "HalfEigenvalue",
    "Problem",
    "ToleranceConfig",
    "WeightError",
    "WeightExpr",
    "asymptotic_count",
    "asymptotic_eigenvalue",
    "bracketing_counts",
    "bracketing_defect",
    "campanato_seminorm",
    "const_eigenvalue",
    "constant",
    "count",
    "eigenvalue",
    "harmonic_weight",
    "integrate_angle",
    "linear_eigenvalue",
    "parse",
    "reconstruct_eigenfunction",
    "remainder_rate",
    "trace_curve",
    "weyl_integral",
]
