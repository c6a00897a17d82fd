"""Convex-body oracles: the hull family Q, Q_t, Q_t°, the lifted bodies
K(eta, kappa), their polar cones, and cross-sections.

Bodies are exposed through a uniform oracle record (membership with tolerance
bands, gauge, support, interior point, circumradius). Everything reduces to
the kernels in `solver`:

  * Q_t° and the cones have closed-form gauges (max of norm and scaled
    hull supports), so their membership is exact arithmetic.
  * K(eta, kappa) membership at height y0 is a Minkowski-sum test
    y_perp ∈ lam*Q + (1-lam)*kappa*Q1°, solved as a certified distance
    program. When every ||x_i|| <= 1 (the common regime), Q1° is exactly
    the unit ball and the test is a single projection distance.
  * Supports of lifted bodies are exact max-of-faces formulas.

Membership codes: -1 inside, 0 boundary band, +1 outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EtaTooLarge, InvalidConfig, NonPositiveT, OriginNotInterior
from .solver import (GeneratorPolytope, HullData, Membership, gauge_polytope,
                     hull_ball_gauge_batch, hull_distance_batch)

CODE_INSIDE = np.int8(-1)
CODE_BOUNDARY = np.int8(0)
CODE_OUTSIDE = np.int8(1)

_MEMBER_OF_CODE = {-1: Membership.INSIDE, 0: Membership.BOUNDARY, 1: Membership.OUTSIDE}


def codes_from_margin(margin: np.ndarray, tol: float) -> np.ndarray:
    """Classify a signed constraint margin (<=0 feasible) with a +-tol band."""
    codes = np.zeros(margin.shape, dtype=np.int8)
    codes[margin < -tol] = CODE_INSIDE
    codes[margin > tol] = CODE_OUTSIDE
    return codes


def codes_from_bounds(lb: np.ndarray, ub: np.ndarray, need: np.ndarray,
                      tol: float) -> np.ndarray:
    """Classify certified dist ∈ [lb, ub] against an accept threshold.

    Solver-backed bodies accept feasibility within tol (a vertex is a
    member), so inside means certified dist ≤ need + tol; boundary is
    reserved for points the bounds genuinely fail to resolve.
    """
    codes = np.zeros(lb.shape, dtype=np.int8)
    codes[ub <= need + tol] = CODE_INSIDE
    codes[lb > need + tol] = CODE_OUTSIDE
    return codes


@dataclass
class LiftedPoint:
    """A point of R^{n+1} split into its e0 height and base component."""

    y0: float
    y_perp: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.y0], np.asarray(self.y_perp, dtype=np.float64)])

    @staticmethod
    def from_array(y: np.ndarray) -> "LiftedPoint":
        y = np.asarray(y, dtype=np.float64).ravel()
        return LiftedPoint(y0=float(y[0]), y_perp=y[1:].copy())


@dataclass
class BodyDescriptor:
    """What a body oracle is, for reports and config round trips."""

    kind: str              # Q | Qt | QtPolar | K | KEta | KEtaKappa | ConePlus |
                           # ConeMinus | ConeMinusPrime | CrossSection | Ball | Custom
    params: dict = field(default_factory=dict)


@dataclass
class HardBodyParams:
    """Parameters of the lifted body family K(eta, kappa)."""

    system: object                 # QuasiOrthogonalSystem
    eta: float = 0.0
    kappa: float = 1.0
    t: float = 1.0                 # auxiliary hull/ball mix; 0.02 for the capped cone

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta < 1.0:
            raise EtaTooLarge(f"eta must be in [0, 1), got {self.eta}")
        if not self.kappa > 0.0:
            raise InvalidConfig(f"kappa must be positive, got {self.kappa}")
        if not self.t > 0.0:
            raise NonPositiveT(f"t must be positive, got {self.t}")


@dataclass
class BodyOracle:
    """A convex body given by evaluators with tolerance contracts."""

    dimension: int
    descriptor: BodyDescriptor
    membership_codes_fn: Callable[[np.ndarray, float], np.ndarray]
    support_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gauge_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    interior_point: Optional[np.ndarray] = None
    outer_radius: float = math.inf
    support_certified_upper: bool = False
    chord_fn: Optional[Callable[[np.ndarray, np.ndarray, float], tuple]] = None
    polar_hint: Optional[Callable[[], "BodyOracle"]] = None
    # populated for the lifted family so certificate code can reach the
    # generator system without re-deriving it from the descriptor
    source_params: Optional[object] = None

    # -- membership ---------------------------------------------------------
    def membership_codes(self, Y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if Y.shape[1] != self.dimension:
            raise InvalidConfig(f"points have dim {Y.shape[1]}, body has {self.dimension}")
        return self.membership_codes_fn(Y, tol)

    def membership(self, y: np.ndarray, tol: float = 1e-9) -> Membership:
        code = int(self.membership_codes(np.asarray(y)[None, :], tol)[0])
        return _MEMBER_OF_CODE[code]

    # -- gauge ----------------------------------------------------------------
    def gauge_values(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if self.gauge_fn is not None:
            return np.asarray(self.gauge_fn(Y), dtype=np.float64)
        return self._gauge_by_bisection(Y)

    def gauge(self, y: np.ndarray) -> float:
        return float(self.gauge_values(np.asarray(y)[None, :])[0])

    def _gauge_by_bisection(self, Y: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Radial bisection on membership; requires 0 strictly inside.

        gauge(y) = min{tau >= 0 : y/tau inside}; membership along the ray is
        monotone, so a doubling/halving bracket plus bisection nails it.
        """
        if int(self.membership_codes(np.zeros((1, self.dimension)), 1e-12)[0]) != -1:
            raise OriginNotInterior(
                f"gauge of {self.descriptor.kind} needs 0 strictly interior")
        B = Y.shape[0]
        norms = np.linalg.norm(Y, axis=1)
        # bracket: lo has y/lo not inside, hi has y/hi inside
        lo = np.zeros(B)
        hi = np.ones(B)
        growing = norms > 0.0
        for _ in range(80):                      # find an inside scale per row
            if not np.any(growing):
                break
            rows = np.where(growing)[0]
            ok = self.membership_codes(Y[rows] / hi[rows, None],
                                       1e-14) == CODE_INSIDE
            growing[rows[ok]] = False
            hi[rows[~ok]] *= 4.0
            growing &= hi <= 1e24
        unbounded = hi > 1e24
        for _ in range(80):                      # shrink the bracket
            live = (hi - lo > tol * np.maximum(hi, 1.0)) & (norms > 0) & ~unbounded
            if not np.any(live):
                break
            rows = np.where(live)[0]
            mid = 0.5 * (lo[rows] + hi[rows])
            inside = self.membership_codes(Y[rows] / mid[:, None],
                                           1e-14) == CODE_INSIDE
            hi[rows] = np.where(inside, mid, hi[rows])
            lo[rows] = np.where(inside, lo[rows], mid)
        gauge = np.where(unbounded, np.inf, 0.5 * (lo + hi))
        gauge[norms == 0.0] = 0.0
        return gauge

    # -- support --------------------------------------------------------------
    def support_values(self, D: np.ndarray) -> np.ndarray:
        D = np.atleast_2d(np.asarray(D, dtype=np.float64))
        if self.support_fn is None:
            raise InvalidConfig(f"{self.descriptor.kind} oracle has no support evaluator")
        return np.asarray(self.support_fn(D), dtype=np.float64)

    def support(self, d: np.ndarray) -> float:
        return float(self.support_values(np.asarray(d)[None, :])[0])

    def polar(self) -> "BodyOracle":
        if self.polar_hint is not None:
            return self.polar_hint()
        from .polarity import polar_oracle

        return polar_oracle(self)


# ---------------------------------------------------------------------------
# Base-space bodies: Q, Q_t, Q_t°, cross-sections.
# ---------------------------------------------------------------------------

def _hull(system) -> HullData:
    if isinstance(system, HullData):
        return system
    if hasattr(system, "hull_data"):
        return system.hull_data()
    return HullData(np.asarray(system, dtype=np.float64))


def build_q(system) -> BodyOracle:
    """Q = conv{+-x_i}: exact support, LP gauge, distance-certified membership."""
    hull = _hull(system)
    poly = GeneratorPolytope(hull.X, symmetric=True)

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        res = hull_distance_batch(hull, Y, 1.0, need=0.75 * tol, band=0.25 * tol,
                                  abs_tol=0.1 * tol)
        return codes_from_bounds(res.lb, res.ub, np.zeros(Y.shape[0]), tol)

    def gauge_vals(Y: np.ndarray) -> np.ndarray:
        return np.array([gauge_polytope(poly, y) for y in Y])

    return BodyOracle(
        dimension=hull.n,
        descriptor=BodyDescriptor("Q", {"m": hull.m}),
        membership_codes_fn=codes,
        support_fn=hull.support,
        gauge_fn=gauge_vals,
        interior_point=np.zeros(hull.n),
        outer_radius=hull.max_norm,
        support_certified_upper=False,
    )


def build_qt(system, t: float) -> BodyOracle:
    """Q_t = conv(Q/t ∪ B): support max(h_Q/t, ||d||), gauge via the 1-D kernel."""
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t}")
    hull = _hull(system)

    def support(D: np.ndarray) -> np.ndarray:
        return np.maximum(hull.support(D) / t, np.linalg.norm(D, axis=1))

    def gauge_vals(Y: np.ndarray) -> np.ndarray:
        res = hull_ball_gauge_batch(hull, Y, float(t), 1.0, rel_tol=1e-10)
        return res.ub

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        res = hull_ball_gauge_batch(hull, Y, float(t), 1.0, need=1.0, band=tol,
                                    rel_tol=1e-10)
        return codes_from_bounds(res.lb, res.ub, np.ones(Y.shape[0]), tol)

    return BodyOracle(
        dimension=hull.n,
        descriptor=BodyDescriptor("Qt", {"t": t}),
        membership_codes_fn=codes,
        support_fn=support,
        gauge_fn=gauge_vals,
        interior_point=np.zeros(hull.n),
        outer_radius=max(1.0, hull.max_norm / t),
        support_certified_upper=False,
    )


def build_qt_polar(system, t: float) -> BodyOracle:
    """Q_t° = t*Q° ∩ B: closed-form gauge max(||y||, h_Q(y)/t)."""
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t}")
    hull = _hull(system)

    def gauge_vals(Y: np.ndarray) -> np.ndarray:
        return np.maximum(np.linalg.norm(Y, axis=1), hull.support(Y) / t)

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return codes_from_margin(gauge_vals(Y) - 1.0, tol)

    def support(D: np.ndarray) -> np.ndarray:
        return hull_ball_gauge_batch(hull, D, float(t), 1.0, rel_tol=1e-10).ub

    return BodyOracle(
        dimension=hull.n,
        descriptor=BodyDescriptor("QtPolar", {"t": t}),
        membership_codes_fn=codes,
        support_fn=support,
        gauge_fn=gauge_vals,
        interior_point=np.zeros(hull.n),
        outer_radius=1.0,
        support_certified_upper=hull.max_norm > t,
    )


def minkowski_codes(hull: HullData, Y: np.ndarray, hull_share: np.ndarray,
                    cap_share: np.ndarray, tol: float,
                    warm: np.ndarray | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Classify y ∈ a*Q + b*Q1° rows; returns (codes, hull weights).

    With every ||x_i|| <= 1, Q1° is the unit ball and the test is a
    certified distance comparison dist(y, a*Q) vs b. Otherwise a
    fully-corrective conditional-gradient loop over the sum's exact and
    kernel-certified extreme points decides the same comparison.
    """
    Y = np.atleast_2d(Y)
    a = np.maximum(np.broadcast_to(np.asarray(hull_share, float), (Y.shape[0],)), 0.0)
    b = np.broadcast_to(np.asarray(cap_share, float), (Y.shape[0],))
    if hull.caps_empty:
        res = hull_distance_batch(hull, Y, a, need=b + 0.75 * tol, band=0.25 * tol,
                                  abs_tol=tol * 0.1, warm=warm)
        return codes_from_bounds(res.lb, res.ub, b, tol), res.weights
    g_lb, g_ub, res = _cap_gate(hull, Y, a, b, tol, warm=warm)
    codes = np.zeros(Y.shape[0], dtype=np.int8)
    codes[g_ub <= tol] = CODE_INSIDE
    codes[g_lb > tol] = CODE_OUTSIDE
    weights = res.weights
    amb = codes == 0
    if np.any(amb):
        sub, Cw, _, _, _ = _minkowski_general(hull, Y[amb], a[amb], b[amb], tol)
        codes[amb] = sub
        weights = weights.copy()
        weights[amb] = Cw
    return codes, weights


def _cap_gate(hull: HullData, Y: np.ndarray, a: np.ndarray, b: np.ndarray,
              tol: float, warm: np.ndarray | None = None):
    """Certified bounds on dist(y, a*Q + b*Q1°) from one projection onto a*Q.

    Q1° ⊆ B gives the lower bound dist(y, a*Q) - b. For the upper bound,
    rescale the projection residual v into b*Q1°: with phi = max(||v||,
    h_Q(v)) the point (b/phi)*v is feasible and costs ||v||*(phi-b)/phi.
    Rows the sandwich cannot classify go to the conditional-gradient
    solver; on walk workloads that is a few percent of the queries.
    """
    r_in = 1.0 / max(hull.max_norm, 1.0)         # r_in*B ⊆ Q1°
    res = hull_distance_batch(hull, Y, a, need=b, band=0.5 * tol,
                              need_low=r_in * b, rel_tol=1e-3,
                              abs_tol=0.1 * tol, warm=warm)
    phi = np.maximum(res.ub, hull.support(res.residual))
    g_lb = res.lb - b
    safe = np.where(phi > 0.0, phi, 1.0)
    g_ub = np.where(phi > 0.0, res.ub * np.maximum(phi - b, 0.0) / safe, 0.0)
    return g_lb, np.maximum(g_ub, g_lb), res


def minkowski_decompose(hull: HullData, Y: np.ndarray, hull_share: np.ndarray,
                        cap_share: np.ndarray, tol: float
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify and split y = X^T c + v with ||c||_1 <= a and v ∈ b*Q1°.

    Returns (codes, hull weights c, bottom parts v). Unlike the
    classification entry point this solves each row to full accuracy so
    the split is usable as an explicit convex decomposition.
    """
    Y = np.atleast_2d(Y)
    a = np.maximum(np.broadcast_to(np.asarray(hull_share, float), (Y.shape[0],)), 0.0)
    b = np.broadcast_to(np.asarray(cap_share, float), (Y.shape[0],))
    if hull.caps_empty:
        res = hull_distance_batch(hull, Y, a, rel_tol=1e-12, abs_tol=0.02 * tol)
        return codes_from_bounds(res.lb, res.ub, b, tol), res.weights, res.residual
    codes, Cw, Bw, _, _ = _minkowski_general(hull, Y, a, b, tol)
    return codes, Cw, Bw


def _minkowski_general(hull: HullData, Y: np.ndarray, a: np.ndarray, b: np.ndarray,
                       tol: float, max_rounds: int = 120
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray,
                                  np.ndarray, np.ndarray]:
    """Fully-corrective conditional gradient for dist(y, a*Q + b*Q1°) vs 0.

    Atoms are a*sigma*x_i + b*z with z a certified extreme point of Q1°
    delivered by the 1-D kernel; the certified lower bound comes from
    Fenchel duality with h_{sum} = a*h_Q + b*h_{Q1°} (kernel upper bound).
    Returns (codes, hull weights, bottom components, dist lb, dist ub);
    the bound columns stay valid for rows whose code resolved early.
    """
    B, n = Y.shape
    X = hull.X
    atoms: list[list[np.ndarray]] = [[] for _ in range(B)]
    atom_ids: list[list[tuple[int, float]]] = [[] for _ in range(B)]
    lam: list[np.ndarray] = [np.zeros(0) for _ in range(B)]
    Z = np.zeros_like(Y)
    Cw = np.zeros((B, hull.m))
    Bw = np.zeros((B, n))
    codes = np.zeros(B, dtype=np.int8)
    lb_out = np.zeros(B)
    active = np.arange(B)
    for _ in range(max_rounds):
        if active.size == 0:
            break
        G = Y[active] - Z[active]
        ng = np.linalg.norm(G, axis=1)
        done_in = ng <= tol
        codes[active[done_in]] = CODE_INSIDE
        # kernel: support and extreme point of Q1° in the residual directions
        kb = hull_ball_gauge_batch(hull, G, 1.0, 1.0, rel_tol=1e-4, abs_tol=1e-12)
        s = X @ G.T if hull.m else np.zeros((0, active.size))
        if hull.m:
            idx = np.argmax(np.abs(s), axis=0)
            sgn = np.sign(s[idx, np.arange(active.size)])
            sgn[sgn == 0.0] = 1.0
        else:
            idx = np.zeros(active.size, dtype=int)
            sgn = np.ones(active.size)
        hq = np.abs(s[idx, np.arange(active.size)]) if hull.m \
            else np.zeros(active.size)
        # certified lower bound on dist via the dual of the projection
        hsum_ub = a[active] * hq + b[active] * kb.ub
        dual = (G * Y[active]).sum(axis=1) - hsum_ub - 0.5 * ng ** 2
        lb = np.sqrt(2.0 * np.maximum(dual, 0.0))
        lb_out[active] = np.maximum(lb_out[active], np.minimum(lb, ng))
        codes[active[lb > tol]] = CODE_OUTSIDE
        resolved = done_in | (lb > tol)
        keep = active[~resolved]
        for row_pos, p in enumerate(active):
            if resolved[row_pos]:
                continue
            hull_atom = a[p] * sgn[row_pos] * X[idx[row_pos]] if hull.m else np.zeros(n)
            atoms[p].append(hull_atom + b[p] * kb.witness[row_pos])
            atom_ids[p].append((int(idx[row_pos]), float(a[p] * sgn[row_pos])))
            V = np.asarray(atoms[p])
            # fully corrective: min ||y - V^T mu||^2 over the simplex
            mu = _simplex_ls(V @ V.T, V @ Y[p])
            lam[p] = mu
            Z[p] = mu @ V
        active = keep
    for p in range(B):
        for mu_j, (i, coef) in zip(lam[p], atom_ids[p]):
            Cw[p, i] += mu_j * coef
        Bw[p] = Z[p] - Cw[p] @ X if hull.m else Z[p]
    ub_out = np.linalg.norm(Y - Z, axis=1)
    return codes, Cw, Bw, lb_out, np.maximum(ub_out, lb_out)


def _simplex_ls(gram: np.ndarray, lin: np.ndarray,
                iters: int = 60) -> np.ndarray:
    """min_mu ||y - V^T mu||^2 over the probability simplex (small k)."""
    k = gram.shape[0]
    mu = np.full(k, 1.0 / k)
    L = max(float(np.linalg.eigvalsh(gram + 1e-14 * np.eye(k)).max()), 1e-12)
    for _ in range(iters):
        grad = gram @ mu - lin
        v = mu - grad / L
        # project onto the simplex
        u = np.sort(v)[::-1]
        css = (np.cumsum(u) - 1.0) / np.arange(1, k + 1)
        rho = np.nonzero(u > css)[0][-1]
        mu = np.maximum(v - css[rho], 0.0)
    return mu


def cross_section(system, s: float) -> BodyOracle:
    """The slice body (1-s)*Q1° + s*Q with exactly additive support."""
    if not 0.0 <= s <= 1.0:
        raise InvalidConfig(f"section parameter must be in [0,1], got {s}")
    hull = _hull(system)

    def support(D: np.ndarray) -> np.ndarray:
        hq1p = hull_ball_gauge_batch(hull, D, 1.0, 1.0, rel_tol=1e-10).ub
        return (1.0 - s) * hq1p + s * hull.support(D)

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        c, _ = minkowski_codes(hull, Y, s, 1.0 - s, tol)
        return c

    return BodyOracle(
        dimension=hull.n,
        descriptor=BodyDescriptor("CrossSection", {"s": s}),
        membership_codes_fn=codes,
        support_fn=support,
        interior_point=np.zeros(hull.n),
        outer_radius=s * hull.max_norm + (1.0 - s) * 1.0,
        support_certified_upper=not hull.caps_empty,
    )


def ball_oracle(dimension: int, radius: float = 1.0,
                center: np.ndarray | None = None) -> BodyOracle:
    """Euclidean ball fixture."""
    if radius <= 0:
        raise InvalidConfig("radius must be positive")
    c = np.zeros(dimension) if center is None else np.asarray(center, float).ravel()

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return codes_from_margin(np.linalg.norm(Y - c, axis=1) - radius, tol)

    def support(D: np.ndarray) -> np.ndarray:
        return D @ c + radius * np.linalg.norm(D, axis=1)

    gauge_fn = None
    if np.linalg.norm(c) < radius:
        def gauge_fn(Y: np.ndarray) -> np.ndarray:
            # min t >= 0 with ||y - t c|| = t r: positive root of a quadratic
            yc = Y @ c
            yy = (Y * Y).sum(axis=1)
            denom = radius * radius - float(c @ c)
            disc = np.sqrt(np.maximum(yc * yc + denom * yy, 0.0))
            return (disc - yc) / denom

    def chord(O: np.ndarray, D: np.ndarray, tol: float):
        # exact ball chord: ||o + t d - c|| = radius, any nonzero d
        oc = O - c
        dd = (D * D).sum(axis=1)
        bq = (oc * D).sum(axis=1) / dd
        cq = ((oc * oc).sum(axis=1) - radius * radius) / dd
        disc = np.sqrt(np.maximum(bq * bq - cq, 0.0))
        return -bq - disc, -bq + disc

    return BodyOracle(
        dimension=dimension,
        descriptor=BodyDescriptor("Ball", {"r": radius}),
        membership_codes_fn=codes,
        support_fn=support,
        gauge_fn=gauge_fn,
        interior_point=c.copy(),
        outer_radius=float(radius + np.linalg.norm(c)),
        chord_fn=chord,
    )


def box_oracle(lo, hi) -> BodyOracle:
    """Axis-aligned box fixture [lo, hi]; a known-volume reference body."""
    lo = np.asarray(lo, dtype=np.float64).ravel()
    hi = np.asarray(hi, dtype=np.float64).ravel()
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise InvalidConfig("box needs lo < hi per coordinate")
    dim = lo.size

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        margin = np.maximum(Y - hi, lo - Y).max(axis=1)
        return codes_from_margin(margin, tol)

    def support(D: np.ndarray) -> np.ndarray:
        return np.maximum(D * hi, D * lo).sum(axis=1)

    gauge_fn = None
    if np.all(lo < 0) and np.all(hi > 0):
        def gauge_fn(Y: np.ndarray) -> np.ndarray:
            return np.maximum(Y / hi, Y / lo).max(axis=1)

    return BodyOracle(
        dimension=dim,
        descriptor=BodyDescriptor("Box", {"lo": tuple(lo), "hi": tuple(hi)}),
        membership_codes_fn=codes,
        support_fn=support,
        gauge_fn=gauge_fn,
        interior_point=0.5 * (lo + hi),
        outer_radius=float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))),
    )


def from_halfspaces(A: np.ndarray, b: np.ndarray, label: str = "Custom") -> BodyOracle:
    """{y : A y <= b} fixture with closed-form margins; needs b > 0 for gauge."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return codes_from_margin((Y @ A.T - b).max(axis=1), tol)

    gauge_fn = None
    if np.all(b > 0):
        def gauge_fn(Y: np.ndarray) -> np.ndarray:
            return np.maximum((Y @ A.T) / b, 0.0).max(axis=1)

    return BodyOracle(
        dimension=A.shape[1],
        descriptor=BodyDescriptor(label, {"halfspaces": A.shape[0]}),
        membership_codes_fn=codes,
        gauge_fn=gauge_fn,
        interior_point=np.zeros(A.shape[1]) if np.all(b > 0) else None,
    )


def scale_oracle(base: BodyOracle, factor: float) -> BodyOracle:
    """factor * body (factor > 0)."""
    if factor <= 0:
        raise InvalidConfig("scale factor must be positive")

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return base.membership_codes_fn(Y / factor, tol)

    support = None
    if base.support_fn is not None:
        def support(D: np.ndarray) -> np.ndarray:
            return factor * base.support_fn(D)

    gauge = None
    if base.gauge_fn is not None:
        def gauge(Y: np.ndarray) -> np.ndarray:
            return base.gauge_fn(Y) / factor

    chord = None
    if base.chord_fn is not None:
        def chord(O: np.ndarray, D: np.ndarray, tol: float):
            lo, hi = base.chord_fn(O / factor, D / factor, tol)
            return lo, hi

    return BodyOracle(
        dimension=base.dimension,
        descriptor=BodyDescriptor(base.descriptor.kind,
                                  {**base.descriptor.params, "scaled_by": factor}),
        membership_codes_fn=codes,
        support_fn=support,
        gauge_fn=gauge,
        interior_point=None if base.interior_point is None
        else base.interior_point * factor,
        outer_radius=base.outer_radius * factor,
        support_certified_upper=base.support_certified_upper,
        chord_fn=chord,
    )


def shift_oracle(base: BodyOracle, v: np.ndarray) -> BodyOracle:
    """body + v."""
    v = np.asarray(v, dtype=np.float64).ravel()

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return base.membership_codes_fn(Y - v, tol)

    support = None
    if base.support_fn is not None:
        def support(D: np.ndarray) -> np.ndarray:
            return base.support_fn(D) + D @ v

    chord = None
    if base.chord_fn is not None:
        def chord(O: np.ndarray, D: np.ndarray, tol: float):
            return base.chord_fn(O - v, D, tol)

    return BodyOracle(
        dimension=base.dimension,
        descriptor=BodyDescriptor(base.descriptor.kind,
                                  {**base.descriptor.params, "shifted": True}),
        membership_codes_fn=codes,
        support_fn=support,
        interior_point=None if base.interior_point is None else base.interior_point + v,
        outer_radius=base.outer_radius + float(np.linalg.norm(v)),
        support_certified_upper=base.support_certified_upper,
        chord_fn=chord,
    )


# ---------------------------------------------------------------------------
# The lifted family K(eta, kappa) and its cones.
# ---------------------------------------------------------------------------

def _keta_shares(eta: float, kappa: float, y0: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray, float]:
    """Hull and bottom shares of the height-y0 section of K(eta, kappa).

    y ∈ K(eta, kappa) iff y0 ∈ [-kappa*eta, 1-eta] and
    y_perp ∈ lam*Q + (1-lam)*kappa*Q1° with lam = (y0 + kappa*eta)/D,
    D = (1-eta) + kappa*eta.
    """
    D = (1.0 - eta) + kappa * eta
    lam = (y0 + kappa * eta) / D
    return lam, (1.0 - lam) * kappa, D


def build_k_eta_kappa(params: HardBodyParams) -> BodyOracle:
    """conv((1-eta)e0 + Q, kappa(-eta*e0 + Q1°)) as a full oracle."""
    hull = _hull(params.system)
    eta, kappa = float(params.eta), float(params.kappa)
    n = hull.n
    dim = n + 1
    lo0, hi0 = -kappa * eta, 1.0 - eta

    def split(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return Y[:, 0], Y[:, 1:]

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        y0, yp = split(Y)
        slab = np.maximum(lo0 - y0, y0 - hi0)
        out = np.full(Y.shape[0], CODE_OUTSIDE, dtype=np.int8)
        rest = np.where(slab <= tol)[0]          # slab accepts within tol
        if rest.size:
            lam, share, _ = _keta_shares(eta, kappa, np.clip(y0[rest], lo0, hi0))
            sec, _ = minkowski_codes(hull, yp[rest], lam, share, tol)
            out[rest] = sec
        return out

    def support(D: np.ndarray) -> np.ndarray:
        d0, dp = split(D)
        hq1p = hull_ball_gauge_batch(hull, dp, 1.0, 1.0, rel_tol=1e-10).ub
        top = (1.0 - eta) * d0 + hull.support(dp)
        bottom = kappa * (-eta * d0 + hq1p)
        return np.maximum(top, bottom)

    def chord(O: np.ndarray, Dir: np.ndarray, tol: float):
        return _k_chord(hull, eta, kappa, O, Dir, tol)

    def make_polar() -> BodyOracle:
        return _k_polar_oracle(hull, eta, kappa, params)

    mid0 = 0.5 * (lo0 + hi0)
    interior = np.zeros(dim)
    interior[0] = mid0
    # Q1° ⊆ B always, so the bottom cap sits in kappa*(eta^2+1)^(1/2) reach
    outer = max(math.hypot(1.0 - eta, hull.max_norm) if hull.m else (1.0 - eta),
                kappa * math.hypot(eta, 1.0))
    kind = "K" if (eta == 0.0 and kappa == 1.0) else \
        ("KEta" if kappa == 1.0 else "KEtaKappa")
    return BodyOracle(
        dimension=dim,
        descriptor=BodyDescriptor(kind, {"eta": eta, "kappa": kappa, "m": hull.m}),
        membership_codes_fn=codes,
        support_fn=support,
        interior_point=interior,
        outer_radius=outer,
        support_certified_upper=not hull.caps_empty,
        chord_fn=chord,
        polar_hint=make_polar,
        source_params=params,
    )


def _k_chord(hull: HullData, eta: float, kappa: float, O: np.ndarray,
             Dir: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Chord of the line o + t*dir through K(eta,kappa); o must be inside.

    The section margin g(t) = dist(y_perp(t), lam(t)Q) - share(t) is convex
    in t (joint convexity of (w, a) -> dist(w, a*Q)), so each endpoint is a
    bracketed root. Each distance solve also certifies an affine minorant
    of g: with z the unit residual of the solve,

        g(t) >= <z, y_perp(t)> - lam(t)*h_Q(z) - share(t),

    which is affine in t and sits below g everywhere on the slab, so its
    root is a certified outer bound on the chord endpoint no matter where
    it was evaluated or how converged the solve was. Illinois regula falsi
    on the evaluated points, tightened by these tangent cuts, closes the
    bracket in a handful of solves per endpoint where plain bisection
    needs ~45.
    """
    O = np.atleast_2d(O)
    Dir = np.atleast_2d(Dir)
    B = O.shape[0]
    lo0, hi0 = -kappa * eta, 1.0 - eta
    o0, d0 = O[:, 0], Dir[:, 0]
    dsum = (1.0 - eta) + kappa * eta
    # slab limits along t
    with np.errstate(divide="ignore", invalid="ignore"):
        t_a = np.where(d0 != 0.0, (lo0 - o0) / d0, -np.inf)
        t_b = np.where(d0 != 0.0, (hi0 - o0) / d0, np.inf)
    t_min = np.minimum(t_a, t_b)
    t_max = np.maximum(t_a, t_b)
    # ball bound keeps d0 == 0 rows finite
    outer = max(math.hypot(max(1.0, 1.0 - eta), max(hull.max_norm, kappa)), 1.0) * 2.0
    nd = np.linalg.norm(Dir, axis=1)
    reach = (np.linalg.norm(O, axis=1) + outer) / np.maximum(nd, 1e-300)
    t_min = np.maximum(t_min, -reach)
    t_max = np.minimum(t_max, reach)

    def margin(tvals: np.ndarray, rows: np.ndarray, warm=None):
        """Certified (g_lb, g_mid, g_ub) plus the minorant (value, dg/dt)."""
        y0 = o0[rows] + tvals * d0[rows]
        yp = O[rows, 1:] + tvals[:, None] * Dir[rows, 1:]
        lam, share, _ = _keta_shares(eta, kappa, np.clip(y0, lo0, hi0))
        lam = np.maximum(lam, 0.0)
        if hull.caps_empty:
            res = hull_distance_batch(hull, yp, lam, need=share, band=tol,
                                      rel_tol=100.0 * tol, abs_tol=0.1 * tol,
                                      warm=warm)
            g_lb, g_ub = res.lb - share, res.ub - share
        else:
            g_lb, g_ub, res = _cap_gate(hull, yp, lam, share, tol, warm=warm)
            amb = (g_lb <= tol) & (g_ub > tol)
            if np.any(amb):
                # the sandwich straddles the threshold; ask the exact solver
                # for genuine distance-to-sum bounds on those rows
                _, _, _, dlb, dub = _minkowski_general(
                    hull, yp[amb], lam[amb], share[amb], tol)
                g_lb[amb] = np.maximum(g_lb[amb], dlb)
                g_ub[amb] = np.maximum(np.minimum(g_ub[amb], dub), g_lb[amb])
        # minorant from the certificate direction; Q1° ⊆ B keeps it below
        # the cap-sum margin too, so one formula serves both regimes
        v = res.residual
        nv = np.linalg.norm(v, axis=1)
        live = nv > 0.0
        hq = hull.support(v)
        safe = np.where(live, nv, 1.0)
        slope0 = d0[rows] / dsum
        mval = np.where(live,
                        ((v * yp).sum(axis=1) - lam * hq) / safe - share,
                        -np.inf)
        mslope = np.where(live,
                          ((v * Dir[rows, 1:]).sum(axis=1) - slope0 * hq) / safe
                          + kappa * slope0,
                          0.0)
        return g_lb, 0.5 * (g_lb + g_ub), g_ub, res.weights, mval, mslope

    def cut(u_cert, u_at, mval, mslope, t_face):
        """Tighten the certified outer bound with the minorant roots."""
        s_u = mslope * t_face
        with np.errstate(divide="ignore", invalid="ignore"):
            u_t = u_at - mval / s_u
        good = (s_u > 0.0) & np.isfinite(u_t)
        return np.where(good, np.minimum(u_cert, np.maximum(u_t, 0.0)), u_cert)

    t_edges = np.empty((2, B))
    all_rows = np.arange(B)
    # the interior evaluation is side-independent; share it across sides
    _, g_mid_c, _, _, mv_c, ms_c = margin(np.zeros(B), all_rows)
    for side, t_face in ((0, t_min), (1, t_max)):
        # work in u ∈ [0, 1] with t = u * t_face so both sides look alike
        _, g_mid0, g_ub0, warm0, mv0, ms0 = margin(t_face, all_rows)
        u_in = np.zeros(B)
        g_in = np.minimum(g_mid_c, -1e-300)
        u_out = np.ones(B)                       # last evaluated outside point
        g_out = np.maximum(g_mid0, 1e-300)
        u_cert = cut(np.ones(B), 1.0, mv0, ms0, t_face)
        u_cert = np.maximum(cut(u_cert, 0.0, mv_c, ms_c, t_face), 0.0)
        done = g_ub0 <= tol                      # chord runs all the way to the face
        last_side = np.zeros(B, dtype=np.int8)   # -1 moved u_in, +1 moved u_out
        warm = warm0[~done] if warm0 is not None else None
        rows = all_rows[~done]
        for it in range(26):
            if rows.size == 0:
                break
            ui, uc = u_in[rows], u_cert[rows]
            gi, go = g_in[rows], g_out[rows]
            w = uc - ui
            u_new = (ui * go - u_out[rows] * gi) / (go - gi)
            if it % 4 == 3:                      # periodic bisection safeguard
                u_new = ui + 0.5 * w
            # keep probes off the endpoints but let them approach the
            # certified bound to within the accepted chord tolerance
            tf = np.maximum(np.abs(t_face[rows]), 1e-300)
            gap = 0.9 * tol * np.maximum(tf * ui, 1.0) / tf
            u_new = np.clip(u_new, ui + 0.02 * w,
                            uc - np.minimum(np.maximum(gap, 0.005 * w), 0.5 * w))
            g_lb, g_mid, g_ub, warm_w, mv, ms = \
                margin(u_new * t_face[rows], rows, warm=warm)
            u_cert[rows] = cut(uc, u_new, mv, ms, t_face[rows])
            inside = g_ub <= tol
            outside = g_lb > tol
            # Illinois: halve the stale endpoint's value on repeated sides
            g_out[rows[inside & (last_side[rows] == -1)]] *= 0.5
            g_in[rows[outside & (last_side[rows] == 1)]] *= 0.5
            upd_in = rows[inside]
            u_in[upd_in] = u_new[inside]
            g_in[upd_in] = np.minimum(g_mid[inside], -1e-300)
            last_side[upd_in] = -1
            upd_out = rows[outside]
            u_out[upd_out] = u_new[outside]
            g_out[upd_out] = np.maximum(g_mid[outside], 1e-300)
            last_side[upd_out] = 1
            u_cert[upd_out] = np.minimum(u_cert[upd_out], u_new[outside])
            u_cert[rows] = np.maximum(u_cert[rows], u_in[rows])
            # rows the solver cannot resolve are sitting on the root
            ambiguous = ~inside & ~outside
            u_in[rows[ambiguous]] = u_new[ambiguous]
            narrow = np.abs(t_face[rows]) * (u_cert[rows] - u_in[rows]) \
                <= tol * np.maximum(np.abs(t_face[rows] * u_in[rows]), 1.0)
            keep = ~(ambiguous | narrow)
            if warm_w is not None:
                warm = warm_w[keep]
            rows = rows[keep]
        t_edges[side] = np.where(done, t_face, u_in * t_face)
    return t_edges[0], t_edges[1]


def _k_polar_oracle(hull: HullData, eta: float, kappa: float,
                    params: HardBodyParams) -> BodyOracle:
    """K(eta,kappa)° = ConePlus(eta) ∩ (1/kappa)*ConeMinus(eta), closed form."""
    n = hull.n
    dim = n + 1

    def gauge_vals(Y: np.ndarray) -> np.ndarray:
        y0, yp = Y[:, 0], Y[:, 1:]
        g_plus = (1.0 - eta) * y0 + hull.support(yp)
        gq1 = _gauge_q1(hull, kappa * yp)
        g_minus = np.maximum(gq1 - eta * (kappa * y0), -eta * (kappa * y0))
        return np.maximum(np.maximum(g_plus, g_minus), 0.0)

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return codes_from_margin(gauge_vals(Y) - 1.0, tol)

    bounded = eta > 0.0
    outer = math.inf
    if bounded:
        # crude but valid: the polar lies in the ball of radius 1/inradius
        axis_in = min(eta * kappa, 1.0 - eta)
        base_in = min(1.0, 1.0 / hull.max_norm if hull.max_norm > 0 else 1.0)
        lam0 = (kappa * eta) / ((1.0 - eta) + kappa * eta)
        r_in = min(axis_in, (1.0 - lam0) * kappa * base_in) if lam0 < 1.0 else axis_in
        outer = 1.0 / max(r_in, 1e-300)

    def make_primal() -> BodyOracle:
        return build_k_eta_kappa(params)

    return BodyOracle(
        dimension=dim,
        descriptor=BodyDescriptor("Custom",
                                  {"polar_of": "KEtaKappa", "eta": eta, "kappa": kappa}),
        membership_codes_fn=codes,
        gauge_fn=gauge_vals,
        support_fn=None,
        interior_point=np.zeros(dim),
        outer_radius=outer,
        polar_hint=make_primal,
    )


def _gauge_q1(hull: HullData, V: np.ndarray) -> np.ndarray:
    """gauge of Q1 = conv(Q ∪ B): ||v|| when Q ⊆ B, else the 1-D kernel."""
    V = np.atleast_2d(V)
    if hull.caps_empty:
        return np.linalg.norm(V, axis=1)
    return hull_ball_gauge_batch(hull, V, 1.0, 1.0, rel_tol=1e-10).ub


def cone_oracle(kind: str, system, eta: float, t: float = 0.02) -> BodyOracle:
    """The polar cones: CPlus, CMinus, CMinusPrime (capped, Q_t° base).

    eta = 0 degenerates CMinus into the cylinder {y : y_perp ∈ Q1}; formulas
    that divide by eta are guarded upstream (closed-form cone volumes report
    infinity there).
    """
    hull = _hull(system)
    kind_l = kind.lower()
    if kind_l not in ("cplus", "cminus", "cminusprime"):
        raise InvalidConfig(f"unknown cone kind {kind!r}")
    if not 0.0 <= eta < 1.0:
        raise EtaTooLarge(f"eta must be in [0,1), got {eta}")
    if kind_l == "cminusprime" and not t > 0:
        raise NonPositiveT(f"t must be positive, got {t}")
    n = hull.n
    dim = n + 1

    if kind_l == "cplus":
        def gauge_vals(Y: np.ndarray) -> np.ndarray:
            return np.maximum((1.0 - eta) * Y[:, 0] + hull.support(Y[:, 1:]), 0.0)
    elif kind_l == "cminus":
        def gauge_vals(Y: np.ndarray) -> np.ndarray:
            gq1 = _gauge_q1(hull, Y[:, 1:])
            return np.maximum(np.maximum(gq1 - eta * Y[:, 0], -eta * Y[:, 0]), 0.0)
    else:
        def gauge_vals(Y: np.ndarray) -> np.ndarray:
            y0, yp = Y[:, 0], Y[:, 1:]
            base = np.maximum(np.linalg.norm(yp, axis=1), hull.support(yp) / t)
            return np.maximum.reduce([base - eta * y0, -eta * y0, y0 / 0.98,
                                      np.zeros_like(y0)])

    def codes(Y: np.ndarray, tol: float) -> np.ndarray:
        return codes_from_margin(gauge_vals(Y) - 1.0, tol)

    return BodyOracle(
        dimension=dim,
        descriptor=BodyDescriptor({"cplus": "ConePlus", "cminus": "ConeMinus",
                                   "cminusprime": "ConeMinusPrime"}[kind_l],
                                  {"eta": eta, **({"t": t} if kind_l == "cminusprime" else {})}),
        membership_codes_fn=codes,
        gauge_fn=gauge_vals,
        interior_point=np.zeros(dim),
        outer_radius=math.inf,
    )
