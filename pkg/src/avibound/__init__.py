"""Residual-based local error bounds for affine variational inequalities.

Layers, bottom to top: `optkernel` (LP / feasibility / projection solves),
`polyhedra` (vertex enumeration, distances, Hausdorff), `gpm` (generalized
polyhedral multifunctions and their Lipschitz moduli), `avi` (residual map
and active-set decomposition of solution sets), `bounds` (empirical error
bound and upper-Lipschitz verification), `solvers` (projection-type
iterations), `instgen` (instance corpus and serialization) and `cli`.
"""

from .config import Caps, Tolerances, DEFAULT_CAPS, DEFAULT_TOL
from .errors import (
    AviboundError,
    CapExceeded,
    DegenerateSampler,
    DimensionMismatch,
    EmptySet,
    NoSolution,
    NumericalBreakdown,
    SchemaError,
)
from .sets import PolyhedralSet, box, nonnegative_orthant

__all__ = [
    "AviboundError",
    "Caps",
    "CapExceeded",
    "DEFAULT_CAPS",
    "DEFAULT_TOL",
    "DegenerateSampler",
    "DimensionMismatch",
    "EmptySet",
    "NoSolution",
    "NumericalBreakdown",
    "PolyhedralSet",
    "SchemaError",
    "Tolerances",
    "box",
    "nonnegative_orthant",
]

__version__ = "0.1.0"
