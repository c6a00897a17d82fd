"""Polar duality along the symmetry axis of the lifted family.

Dilating K(eta, 1) by 1 + h*y0 (a level set of the gauge minus a linear
term in the height) lands back in the same two-parameter family: the set
{y : gauge(y) <= 1 + h*y0} equals scale * K(eta, kappa) with

    kappa = (1 - (1-eta)h) / (1 + eta*h),   scale = 1 / (1 - (1-eta)h).

This module computes that map, checks it pointwise by running both
membership formulations against each other, provides a generic polar
oracle built on the support/gauge exchange, and counts vertex/facet pairs
of explicit low-dimensional polytopes against their duals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import (
    CODE_INSIDE,
    CODE_OUTSIDE,
    BodyDescriptor,
    BodyOracle,
    HardBodyParams,
    build_k_eta_kappa,
    minkowski_codes,
    scale_oracle,
)
from .design import QuasiOrthogonalSystem
from .errors import (
    DimensionTooLarge,
    EtaTooLarge,
    HOutOfRange,
    InvalidConfig,
    OriginNotInterior,
)
from .streams import stream

__all__ = [
    "PolarShiftResult",
    "PolarShiftCheck",
    "DualCountReport",
    "polar_shift",
    "polar_oracle",
    "verify_polar_shift",
    "dual_count",
]


# ---------------------------------------------------------------------------
# The (eta, h) -> (kappa, scale) map.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarShiftResult:
    """Parameters of the shifted dilate {gauge(y) <= 1 + h*y0}."""

    eta: float
    h: float
    kappa: float
    scale: float

    def to_json(self) -> dict:
        return {"eta": self.eta, "h": self.h,
                "kappa": self.kappa, "scale": self.scale}


def polar_shift(eta: float, h: float) -> PolarShiftResult:
    """kappa and scale of the axis-shifted dilate of K(eta, 1).

    The map is defined for -1/eta <= h < 1/(1-eta); the upper end is
    rejected with a 1e-9 safety margin because scale diverges there. At
    h = -1/eta exactly, kappa is infinite (the dilate degenerates to a
    cone) and is returned as math.inf.
    """
    eta = float(eta)
    h = float(h)
    if not 0.0 <= eta < 1.0:
        raise EtaTooLarge(f"eta must be in [0,1), got {eta}")
    if h >= 1.0 / (1.0 - eta) - 1e-9:
        raise HOutOfRange(f"h={h} at or above 1/(1-eta)={1.0 / (1.0 - eta)}")
    if eta > 0.0 and h < -1.0 / eta:
        raise HOutOfRange(f"h={h} below -1/eta={-1.0 / eta}")
    num = 1.0 - (1.0 - eta) * h
    den = 1.0 + eta * h
    kappa = num / den if den > 0.0 else math.inf
    return PolarShiftResult(eta=eta, h=h, kappa=kappa, scale=1.0 / num)


# ---------------------------------------------------------------------------
# Generic polar oracle: gauge and support trade places.
# ---------------------------------------------------------------------------

def polar_oracle(body: BodyOracle, tol: float = 1e-8) -> BodyOracle:
    """The polar of a body with the origin strictly inside.

    Membership in the polar is the support inequality h_body(y) <= 1, the
    polar gauge IS the body's support function, and the polar support is
    the body's gauge (falling back to radial bisection on membership when
    the body has no closed-form gauge).
    """
    if int(body.membership_codes(np.zeros((1, body.dimension)), 1e-12)[0]) \
            != CODE_INSIDE:
        raise OriginNotInterior(
            f"polar of {body.descriptor.kind} needs 0 strictly inside")
    if body.support_fn is None:
        raise InvalidConfig(
            f"{body.descriptor.kind} oracle has no support evaluator")

    def codes(Y: np.ndarray, tol_: float) -> np.ndarray:
        margin = body.support_values(Y) - 1.0
        out = np.zeros(Y.shape[0], dtype=np.int8)
        out[margin < -tol_] = CODE_INSIDE
        out[margin > tol_] = CODE_OUTSIDE
        return out

    def gauge_vals(Y: np.ndarray) -> np.ndarray:
        return body.support_values(Y)

    def support_vals(D: np.ndarray) -> np.ndarray:
        return body.gauge_values(D)

    return BodyOracle(
        dimension=body.dimension,
        descriptor=BodyDescriptor("Polar", {"of": body.descriptor.kind}),
        membership_codes_fn=codes,
        support_fn=support_vals,
        gauge_fn=gauge_vals,
        interior_point=np.zeros(body.dimension),
        outer_radius=math.inf,
        support_certified_upper=False,
        polar_hint=lambda: body,
    )


# ---------------------------------------------------------------------------
# Pointwise verification of the shift identity.
# ---------------------------------------------------------------------------

def _shifted_dilate_codes(system: QuasiOrthogonalSystem, eta: float,
                          h: float, Y: np.ndarray, tol: float) -> np.ndarray:
    """Membership codes of {y : gauge_{K(eta,1)}(y) <= 1 + h*y0}.

    Scaling the section identity of K(eta, 1) by tau = 1 + h*y0 turns the
    condition into a single Minkowski-sum test: the perpendicular part
    must lie in (y0 + eta*tau)Q + ((1-eta)tau - y0)Q1°, and the two
    shares being nonnegative is exactly the height constraint.
    """
    hull = system.hull_data()
    y0, yp = Y[:, 0], Y[:, 1:]
    tau = 1.0 + h * y0
    a = y0 + eta * tau
    b = (1.0 - eta) * tau - y0
    out = np.full(Y.shape[0], CODE_OUTSIDE, dtype=np.int8)
    ok = (tau > tol) & (a >= -tol) & (b >= -tol)
    rows = np.where(ok)[0]
    if rows.size:
        sec, _ = minkowski_codes(hull, yp[rows], np.maximum(a[rows], 0.0),
                                 np.maximum(b[rows], 0.0), tol)
        out[rows] = sec
    return out


@dataclass
class PolarShiftCheck:
    """Agreement of the two membership formulations of the shifted dilate.

    Disagreements count only definite conflicts (one side certifies
    inside while the other certifies outside); unresolved boundary codes
    agree with everything. max_boundary_offset is the largest |relative
    radial offset| among disagreeing near-boundary samples, so a nonzero
    value far above the solve tolerance indicates a real mismatch rather
    than boundary noise.
    """

    eta: float
    h: float
    kappa: float
    scale: float
    n_points: int
    disagreement_count: int
    disagreement_fraction: float
    max_boundary_offset: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "eta": self.eta, "h": self.h,
            "kappa": self.kappa, "scale": self.scale,
            "n_points": self.n_points,
            "disagreement_count": self.disagreement_count,
            "disagreement_fraction": self.disagreement_fraction,
            "max_boundary_offset": self.max_boundary_offset,
            "passed": self.passed,
        }


def verify_polar_shift(system: QuasiOrthogonalSystem, eta: float, h: float,
                       n_points: int = 1000, seed: int = 0,
                       tol: float = 1e-6, boundary_band: float = 1e-3,
                       max_disagreement: float = 0.005) -> PolarShiftCheck:
    """Compare the shifted dilate against scale * K(eta, kappa) pointwise.

    Half the sample is uniform in a box slightly larger than the target
    body, half sits within +-boundary_band (relative) of the target's
    boundary along random rays from its interior point, where any
    systematic error between the two formulations would concentrate.
    """
    res = polar_shift(eta, h)
    if not math.isfinite(res.kappa) or res.kappa <= 0.0:
        raise HOutOfRange(f"h={h} gives kappa={res.kappa}, nothing to compare")
    n = system.n
    dim = n + 1
    right = scale_oracle(
        build_k_eta_kappa(HardBodyParams(system, eta, res.kappa)), res.scale)

    rng = stream(seed, "polar_shift")
    n_uniform = n_points // 2
    n_edge = n_points - n_uniform

    lo0 = -res.scale * res.kappa * eta
    hi0 = res.scale * (1.0 - eta)
    pad = 0.1 * (hi0 - lo0) + 1e-3
    radius = 1.1 * res.scale * max(system.hull_data().max_norm, 1.0)
    U = np.empty((n_uniform, dim))
    U[:, 0] = rng.uniform(lo0 - pad, hi0 + pad, size=n_uniform)
    G = rng.standard_normal((n_uniform, n))
    G /= np.maximum(np.linalg.norm(G, axis=1), 1e-300)[:, None]
    U[:, 1:] = G * (radius * rng.random(n_uniform) ** (1.0 / n))[:, None]

    O = np.tile(right.interior_point, (n_edge, 1))
    D = rng.standard_normal((n_edge, dim))
    D /= np.maximum(np.linalg.norm(D, axis=1), 1e-300)[:, None]
    _, t_plus = right.chord_fn(O, D, 1e-9)
    offs = rng.uniform(-boundary_band, boundary_band, size=n_edge)
    E = O + (t_plus * (1.0 + offs))[:, None] * D

    Y = np.concatenate([U, E], axis=0)
    left_codes = _shifted_dilate_codes(system, eta, h, Y, tol)
    right_codes = right.membership_codes(Y, tol)
    conflict = ((left_codes == CODE_INSIDE) & (right_codes == CODE_OUTSIDE)) \
        | ((left_codes == CODE_OUTSIDE) & (right_codes == CODE_INSIDE))
    count = int(np.count_nonzero(conflict))
    edge_conflict = conflict[n_uniform:]
    max_off = float(np.abs(offs[edge_conflict]).max()) if edge_conflict.any() else 0.0
    frac = count / max(n_points, 1)
    return PolarShiftCheck(
        eta=float(eta), h=float(h), kappa=res.kappa, scale=res.scale,
        n_points=int(n_points),
        disagreement_count=count,
        disagreement_fraction=frac,
        max_boundary_offset=max_off,
        passed=frac <= max_disagreement,
    )


# ---------------------------------------------------------------------------
# Vertex/facet duality for explicit low-dimensional polytopes.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualCountReport:
    """Vertex and facet counts of a polytope and of its polar."""

    n_vertices: int
    n_facets: int
    dual_vertices: int
    dual_facets: int

    @property
    def consistent(self) -> bool:
        return (self.n_facets == self.dual_vertices
                and self.n_vertices == self.dual_facets)

    def to_json(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "n_facets": self.n_facets,
            "dual_vertices": self.dual_vertices,
            "dual_facets": self.dual_facets,
            "consistent": self.consistent,
        }


def _facet_planes(hull) -> np.ndarray:
    """Distinct supporting hyperplanes of a qhull result.

    The hull output is triangulated, so a non-simplicial facet shows up
    as several coplanar rows of `equations`; counting facets means
    deduplicating those rows (normals are unit length, so a fixed 1e-8
    rounding is safe at these dimensions). Only sound when the input
    coordinates are exact: rows of one facet then agree to roundoff.
    """
    return np.unique(np.round(hull.equations, 8), axis=0)


def _count_facets_of_polar(A: np.ndarray, tol: float = 1e-7) -> int:
    """Facets of {y : a_i . y <= 1}: constraints whose removal opens the set.

    Counting these on a convex hull of floating dual points is ill posed:
    the polar of a simplicial polytope has non-simplicial facets, and the
    coplanarity error the dual points inherit from the primal's plane
    fits turns each one into a fan of genuine sliver facets no plane
    clustering can undo. The halfspace data itself is exact, so count
    there instead: a_i supports a facet iff max a_i . y over the other
    constraints exceeds 1, an LP with the tested row relaxed (not
    dropped) so the objective stays bounded even when the remaining rows
    leave a recession direction.
    """
    from scipy.optimize import linprog

    m = A.shape[0]
    ones = np.ones(m)
    count = 0
    for i in range(m):
        b = ones.copy()
        b[i] = 2.0
        res = linprog(-A[i], A_ub=A, b_ub=b, bounds=(None, None),
                      method="highs")
        if res.status != 0:
            raise InvalidConfig(
                f"facet redundancy LP ended with status {res.status}")
        if -res.fun > 1.0 + tol:
            count += 1
    return count


def dual_count(points: np.ndarray, center: np.ndarray | None = None
               ) -> DualCountReport:
    """Count vertices/facets of conv(points) and of its polar body.

    The polar is taken about `center` (default: the vertex centroid,
    which is strictly interior for any full-dimensional hull). Exact
    facet enumeration is exponential in the dimension, so inputs beyond
    R^8 are rejected.
    """
    from scipy.spatial import ConvexHull, QhullError

    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dim = P.shape[1]
    if dim > 8:
        raise DimensionTooLarge(f"facet enumeration capped at R^8, got R^{dim}")
    if P.shape[0] < dim + 1:
        raise InvalidConfig(
            f"need at least {dim + 1} points in R^{dim}, got {P.shape[0]}")
    try:
        hull = ConvexHull(P)
    except QhullError as e:
        raise InvalidConfig(f"degenerate point set: {e}") from e
    if center is None:
        center = P[hull.vertices].mean(axis=0)
    center = np.asarray(center, dtype=np.float64).reshape(dim)

    # facets of A(x - center) <= b with b > 0 map to polar vertices a_i/b_i
    planes = _facet_planes(hull)
    A = planes[:, :-1]
    b = -planes[:, -1] - A @ center
    if np.any(b <= 1e-12):
        raise OriginNotInterior("polar center is not strictly inside the hull")
    dual_points = A / b[:, None]
    try:
        dual_hull = ConvexHull(dual_points)
    except QhullError as e:
        raise InvalidConfig(f"degenerate polar point set: {e}") from e
    # the polar is {y : (p - center) . y <= 1 over the input points}; its
    # facet count comes from that exact halfspace data, not from a second
    # floating-point hull
    return DualCountReport(
        n_vertices=int(hull.vertices.size),
        n_facets=int(planes.shape[0]),
        dual_vertices=int(dual_hull.vertices.size),
        dual_facets=_count_facets_of_polar(P - center),
    )
