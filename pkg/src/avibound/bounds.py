"""Empirical verification of the residual error bound and of the upper
Lipschitz continuity of the inverse residual map.

Both checks sample deterministically (per-sample derived seeds), reduce by a
running maximum of distance/residual ratios, and report a trace of that
maximum versus sample count.  "Stabilized" means the running maximum moved
by at most `STABLE_REL_CHANGE` over the final doubling of samples; the
theory asserts a finite constant exists, not its value, so a stable plateau
is the strongest checkable signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .avi import AviInstance, inverse_residual, residual
from .config import DEFAULT_CAPS, DEFAULT_TOL, Caps, Tolerances
from .errors import DegenerateSampler, NoSolution
from .parallel import pmap
from .polyhedra import distance, enumerate_vertices, feasible_point, union_distance
from .rng import SplitMix64, derive_seed
from .sets import _as_vector

STABLE_REL_CHANGE = 0.05
RESIDUAL_FLOOR_FACTOR = 10.0  # ratios below 10 * tol.cmp are 0/0 noise
DEFAULT_NOISE_SCALES = (0.01, 0.1, 1.0)
EPSILON_LADDER = tuple(2.0 ** (-k) for k in range(11))  # 1, 1/2, ..., 2^-10


class SolutionGeometry:
    """Distance oracle for the solution set plus anchor points for sampling.

    The default construction enumerates the polyhedral pieces of the
    solution set.  Separable instances (diagonal operator on the nonnegative
    orthant) get a product-form oracle instead, which keeps the truncation
    experiment tractable far beyond the active-set cap.
    """

    def __init__(self, distance_fn, anchors, num_pieces=None):
        self._distance_fn = distance_fn
        self.anchors = [np.asarray(a, dtype=float) for a in anchors]
        self.num_pieces = num_pieces
        if not self.anchors:
            raise NoSolution("solution geometry needs at least one anchor point")

    def distance(self, x) -> float:
        return float(self._distance_fn(np.asarray(x, dtype=float)))

    @classmethod
    def from_pieces(cls, pieces, caps: Caps = DEFAULT_CAPS,
                    tol: Tolerances = DEFAULT_TOL) -> "SolutionGeometry":
        pieces = list(pieces)
        if not pieces:
            raise NoSolution("empty solution set")
        anchors = []
        for piece in pieces:
            try:
                vs = enumerate_vertices(piece, caps, tol)
                anchors.extend(vs.vertices)
            except Exception:
                anchors.append(feasible_point(piece, tol))
        dedup = []
        for a in anchors:
            if all(np.linalg.norm(a - b) > tol.cmp for b in dedup):
                dedup.append(a)
        return cls(
            distance_fn=lambda x: union_distance(pieces, x, tol),
            anchors=dedup,
            num_pieces=len(pieces),
        )

    @classmethod
    def from_instance(cls, inst: AviInstance, caps: Caps = DEFAULT_CAPS,
                      tol: Tolerances = DEFAULT_TOL) -> "SolutionGeometry":
        from .avi import enumerate_solution_set

        return cls.from_pieces(enumerate_solution_set(inst, caps, tol), caps, tol)

    @classmethod
    def separable_orthant(cls, diagonal, q, caps: Caps = DEFAULT_CAPS,
                          tol: Tolerances = DEFAULT_TOL) -> "SolutionGeometry":
        """Product geometry for M = diag(diagonal), C = orthant.

        Each coordinate is a scalar complementarity problem; the solution set
        is the product of the per-axis solution sets and distances add in
        squares.
        """
        from .avi import enumerate_solution_set
        from .sets import nonnegative_orthant

        diagonal = np.asarray(diagonal, dtype=float)
        q = np.asarray(q, dtype=float)
        axis_pieces = []
        anchor = np.zeros(diagonal.size)
        for i in range(diagonal.size):
            inst_1d = AviInstance(
                m_op=[[diagonal[i]]], q=[q[i]], c_set=nonnegative_orthant(1)
            )
            pieces = enumerate_solution_set(inst_1d, caps, tol)
            if not pieces:
                raise NoSolution(f"coordinate {i} has no solution")
            axis_pieces.append(pieces)
            anchor[i] = enumerate_vertices(pieces[0], caps, tol).vertices[0][0]

        def dist(x):
            total = 0.0
            for i, pieces in enumerate(axis_pieces):
                di = union_distance(pieces, [x[i]], tol)
                total += di * di
            return math.sqrt(total)

        return cls(distance_fn=dist, anchors=[anchor], num_pieces=None)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one empirical bound check.

    `ratio_trace` holds (accepted sample count, running max ratio) pairs and
    `violations` is empty exactly when the verdict passes.
    """

    kind: str
    c_emp: float
    epsilon: float | None
    num_samples: int
    worst_ratio_witness: np.ndarray | None
    violations: list
    ratio_trace: list
    notes: dict = field(default_factory=dict)
    per_family: dict | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "c_emp": self.c_emp,
            "epsilon": self.epsilon,
            "num_samples": self.num_samples,
            "worst_ratio_witness": (
                [float(v) for v in self.worst_ratio_witness]
                if self.worst_ratio_witness is not None
                else None
            ),
            "violations": [str(v) for v in self.violations],
            "ratio_trace": [[int(c), float(v)] for c, v in self.ratio_trace],
            "notes": {k: _jsonable(v) for k, v in self.notes.items()},
            "per_family": (
                {str(k): float(v) for k, v in self.per_family.items()}
                if self.per_family is not None
                else None
            ),
            "passed": self.passed,
        }


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _running_max_trace(values):
    trace = []
    best = 0.0
    checkpoint = 1
    for count, v in enumerate(values, start=1):
        best = max(best, v)
        if count >= checkpoint:
            trace.append((count, best))
            checkpoint *= 2
    if values and (not trace or trace[-1][0] != len(values)):
        trace.append((len(values), best))
    return trace, best


def _is_stable(ratios, min_samples=8):
    """Running max changed <= 5% over the final doubling of samples."""
    if len(ratios) < min_samples:
        return False
    running = np.maximum.accumulate(ratios)
    half = running[len(ratios) // 2 - 1]
    full = running[-1]
    if full <= 0.0:
        return True
    return (full - half) / full <= STABLE_REL_CHANGE


@dataclass(frozen=True)
class ErrorBoundSample:
    point: np.ndarray
    residual_norm: float
    distance: float


def _sample_error_bound_table(inst, geometry, num_samples, master_seed,
                              noise_scales, tol, threads=1):
    anchors = geometry.anchors

    def draw(i):
        stream = SplitMix64(derive_seed(master_seed, i))
        anchor = anchors[stream.randint(0, len(anchors) - 1)]
        scale = noise_scales[stream.randint(0, len(noise_scales) - 1)]
        x = anchor + scale * np.array(stream.normals(inst.dim))
        rnorm = residual(inst, x, tol).norm
        dist = geometry.distance(x)
        return ErrorBoundSample(point=x, residual_norm=rnorm, distance=dist)

    return pmap(draw, range(num_samples), threads)


def _reduce_error_bound(table, epsilon, tol):
    floor = RESIDUAL_FLOOR_FACTOR * tol.cmp
    ratios = []
    witness = None
    c_emp = 0.0
    excluded_floor = 0
    filtered_eps = 0
    for sample in table:
        if sample.residual_norm < floor:
            excluded_floor += 1
            continue
        if sample.residual_norm > epsilon:
            filtered_eps += 1
            continue
        ratio = sample.distance / sample.residual_norm
        ratios.append(ratio)
        if ratio > c_emp:
            c_emp = ratio
            witness = sample.point
    return ratios, c_emp, witness, excluded_floor, filtered_eps


def verify_error_bound(inst: AviInstance, epsilon: float,
                       num_samples: int = 400, master_seed: int = 0,
                       geometry: SolutionGeometry | None = None,
                       noise_scales=DEFAULT_NOISE_SCALES,
                       caps: Caps = DEFAULT_CAPS,
                       tol: Tolerances = DEFAULT_TOL,
                       threads: int = 1) -> BoundReport:
    """Estimate the constant in d(x, solutions) <= c ||R(x)|| near solutions.

    Samples are anchor points of the solution set plus Gaussian noise at the
    given scales; only samples with residual norm in (10 tol.cmp, epsilon]
    enter the ratio.  The verdict passes when the running maximum stabilized.
    Raises NoSolution when the solution set is empty and DegenerateSampler
    when no sample survives the residual filter.
    """
    geometry = geometry or SolutionGeometry.from_instance(inst, caps, tol)
    table = _sample_error_bound_table(
        inst, geometry, num_samples, master_seed, noise_scales, tol, threads
    )
    ratios, c_emp, witness, excluded_floor, filtered_eps = _reduce_error_bound(
        table, epsilon, tol
    )
    if not ratios:
        raise DegenerateSampler(
            f"no sample passed the residual filter (epsilon={epsilon})"
        )
    trace, _ = _running_max_trace(ratios)
    violations = []
    if not math.isfinite(c_emp):
        violations.append("ratio diverged")
    if not _is_stable(ratios):
        violations.append(
            "ratio trace not stabilized over the final doubling of samples"
        )
    return BoundReport(
        kind="error_bound",
        c_emp=c_emp,
        epsilon=epsilon,
        num_samples=len(ratios),
        worst_ratio_witness=witness,
        violations=violations,
        ratio_trace=trace,
        notes={
            "excluded_zero_residual": excluded_floor,
            "filtered_above_epsilon": filtered_eps,
            "noise_scales": list(noise_scales),
            "master_seed": master_seed,
        },
    )


@dataclass(frozen=True)
class LipschitzCheckConfig:
    """Sampling plan around a base point for the inverse-residual check."""

    base_point: np.ndarray
    radius_ladder: tuple = (0.05, 0.2, 0.8)
    samples_per_radius: int = 12
    master_seed: int = 0

    def __post_init__(self):
        base = np.asarray(self.base_point, dtype=float)
        base.setflags(write=False)
        object.__setattr__(self, "base_point", base)
        radii = tuple(float(r) for r in self.radius_ladder)
        if any(r <= 0 for r in radii) or list(radii) != sorted(radii):
            raise ValueError("radius ladder must be positive and increasing")
        object.__setattr__(self, "radius_ladder", radii)


def verify_upper_lipschitz_inverse(inst: AviInstance, cfg: LipschitzCheckConfig,
                                   caps: Caps = DEFAULT_CAPS,
                                   tol: Tolerances = DEFAULT_TOL) -> BoundReport:
    """Check R^{-1}(y) subset R^{-1}(y0) + c ||y - y0|| B on sampled y.

    Every vertex of every piece of the sampled preimage must sit within
    c * ||y - y0|| of the base preimage; c_emp is the largest observed
    distance ratio.  Per-active-pattern ratios are reported alongside, since
    the global modulus is the maximum of the per-pattern ones.  A base point
    outside the (closed) domain of the inverse passes vacuously with a note
    as long as sampled neighbors stay outside too.
    """
    y0 = _as_vector(cfg.base_point, inst.dim, "base_point")
    base_labelled = inverse_residual(inst, y0, caps, tol, keep_active=True)
    base_pieces = [piece for _, piece in base_labelled]
    base_by_active = dict(base_labelled)
    ratios = []
    witness = None
    c_emp = 0.0
    per_family: dict = {}
    outside_domain = 0
    near_domain_hits = 0
    family_mismatches = 0
    for r_index, radius in enumerate(cfg.radius_ladder):
        for j in range(cfg.samples_per_radius):
            stream = SplitMix64(derive_seed(cfg.master_seed, r_index, j))
            y = y0 + radius * np.array(stream.normals(inst.dim))
            labelled = inverse_residual(inst, y, caps, tol, keep_active=True)
            if not labelled:
                outside_domain += 1
                continue
            if not base_pieces:
                near_domain_hits += 1
                continue
            dy = float(np.linalg.norm(y - y0))
            if dy <= 1e-12:
                continue
            for active, piece in labelled:
                vs = enumerate_vertices(piece, caps, tol)
                for v in vs.vertices:
                    dist = union_distance(base_pieces, v, tol)
                    ratio = dist / dy
                    ratios.append(ratio)
                    if ratio > c_emp:
                        c_emp = ratio
                        witness = v
                    if active in base_by_active:
                        fam_dist = distance(base_by_active[active], v, tol)[0]
                        key = active
                        per_family[key] = max(per_family.get(key, 0.0), fam_dist / dy)
                    else:
                        family_mismatches += 1
    notes = {
        "base_point": y0,
        "radius_ladder": list(cfg.radius_ladder),
        "samples_per_radius": cfg.samples_per_radius,
        "master_seed": cfg.master_seed,
        "outside_domain": outside_domain,
        "family_mismatches": family_mismatches,
    }
    violations = []
    if not base_pieces:
        notes["empty_base_preimage"] = True
        notes["near_domain_hits"] = near_domain_hits
        return BoundReport(
            kind="upper_lipschitz_inverse",
            c_emp=0.0,
            epsilon=None,
            num_samples=0,
            worst_ratio_witness=None,
            violations=[],
            ratio_trace=[],
            notes=notes,
        )
    if not ratios:
        raise DegenerateSampler("all sampled y landed outside dom R^{-1}")
    trace, _ = _running_max_trace(ratios)
    if not math.isfinite(c_emp):
        violations.append("ratio diverged")
    return BoundReport(
        kind="upper_lipschitz_inverse",
        c_emp=c_emp,
        epsilon=None,
        num_samples=len(ratios),
        worst_ratio_witness=witness,
        violations=violations,
        ratio_trace=trace,
        notes=notes,
        per_family=per_family,
    )


@dataclass(frozen=True)
class LocalRadiusResult:
    epsilon: float
    c_emp: float
    stabilized: bool
    curve: list  # (epsilon, c_emp, samples kept, stabilized)

    def to_json_dict(self) -> dict:
        return {
            "kind": "local_radius",
            "epsilon": self.epsilon,
            "c_emp": self.c_emp,
            "stabilized": self.stabilized,
            "curve": [
                {
                    "epsilon": e,
                    "c_emp": c,
                    "num_samples": int(k),
                    "stabilized": bool(s),
                }
                for e, c, k, s in self.curve
            ],
        }


def find_local_radius(inst: AviInstance,
                      num_samples: int = 400, master_seed: int = 0,
                      geometry: SolutionGeometry | None = None,
                      noise_scales=DEFAULT_NOISE_SCALES,
                      epsilons=EPSILON_LADDER,
                      caps: Caps = DEFAULT_CAPS,
                      tol: Tolerances = DEFAULT_TOL,
                      threads: int = 1) -> LocalRadiusResult:
    """Largest epsilon in the halving ladder with a stabilized ratio trace.

    One sample table is drawn and every epsilon filters it, so the curve is
    a monotone reduction of the same data rather than fresh noise per level.
    """
    geometry = geometry or SolutionGeometry.from_instance(inst, caps, tol)
    table = _sample_error_bound_table(
        inst, geometry, num_samples, master_seed, noise_scales, tol, threads
    )
    curve = []
    chosen = None
    for eps in epsilons:
        ratios, c_emp, _, _, _ = _reduce_error_bound(table, eps, tol)
        stable = _is_stable(ratios)
        curve.append((eps, c_emp, len(ratios), stable))
        if stable and chosen is None:
            chosen = (eps, c_emp, True)
    if chosen is None:
        # no level stabilized: report the largest epsilon that kept samples
        # (the estimate itself, not the plateau verdict) rather than nothing
        populated = [row for row in curve if row[2] > 0]
        if not populated:
            raise DegenerateSampler("no sample passed any epsilon filter")
        eps, c_emp, _, _ = populated[0]
        chosen = (eps, c_emp, False)
    return LocalRadiusResult(
        epsilon=chosen[0], c_emp=chosen[1], stabilized=chosen[2], curve=curve
    )


@dataclass(frozen=True)
class TruncationRow:
    dim: int
    epsilon: float
    c_emp: float
    stabilized: bool


@dataclass(frozen=True)
class TruncationTable:
    spectrum: str
    rows: list

    def c_values(self) -> list:
        return [row.c_emp for row in self.rows]

    def to_json_dict(self) -> dict:
        return {
            "kind": "truncation_table",
            "spectrum": self.spectrum,
            "rows": [
                {
                    "dim": row.dim,
                    "epsilon": row.epsilon,
                    "c_emp": row.c_emp,
                    "stabilized": row.stabilized,
                }
                for row in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["dim,epsilon,c_emp,stabilized"]
        for row in self.rows:
            lines.append(f"{row.dim},{row.epsilon},{row.c_emp},{row.stabilized}")
        return "\n".join(lines) + "\n"


def truncation_study(family, dims, num_samples: int = 400, master_seed: int = 0,
                     caps: Caps = DEFAULT_CAPS,
                     tol: Tolerances = DEFAULT_TOL) -> TruncationTable:
    """Error-bound constants along a family of growing diagonal instances.

    `family` must provide `spectrum_name`, `instance(n)` and `diagonal(n)` /
    `shift(n)` (see instgen.TruncationFamily).  The product-form solution
    geometry keeps dimensions beyond the active-set cap tractable.
    """
    rows = []
    for index, n in enumerate(dims):
        inst = family.instance(n)
        geometry = SolutionGeometry.separable_orthant(
            family.diagonal(n), family.shift(n), caps, tol
        )
        result = find_local_radius(
            inst,
            num_samples=num_samples,
            master_seed=derive_seed(master_seed, index),
            geometry=geometry,
            caps=caps,
            tol=tol,
        )
        rows.append(
            TruncationRow(
                dim=n,
                epsilon=result.epsilon,
                c_emp=result.c_emp,
                stabilized=result.stabilized,
            )
        )
    return TruncationTable(spectrum=family.spectrum_name, rows=rows)
