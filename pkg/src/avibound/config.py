"""Global numerical tolerances and combinatorial caps.

All comparisons in the library go through a single `Tolerances` instance so
that a batch run can tighten or loosen everything in one place.  The defaults
assume double precision and dense factorizations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used by the solvers and geometric predicates.

    feas: feasibility slack accepted on constraints.
    opt:  optimality slack (duality gaps, KKT residuals).
    cmp:  general-purpose comparison slack (dedup, verdicts).
    """

    feas: float = 1e-9
    opt: float = 1e-7
    cmp: float = 1e-6

    def with_cmp(self, cmp: float) -> "Tolerances":
        return replace(self, cmp=cmp)


@dataclass(frozen=True)
class Caps:
    """Caps that keep the exhaustive combinatorial routines desk-scale.

    dim_cap / row_cap bound vertex enumeration inputs; active_set_cap bounds
    the number of constraint rows whose 2^m active patterns are enumerated;
    subset_budget bounds the number of candidate bases one enumeration may
    inspect.
    """

    dim_cap: int = 10
    row_cap: int = 24
    active_set_cap: int = 16
    subset_budget: int = 2_000_000


DEFAULT_TOL = Tolerances()
DEFAULT_CAPS = Caps()
