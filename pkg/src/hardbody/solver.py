"""Convex-analysis kernels: gauges, supports, projections, classifications.

Everything geometric in this library reduces to a handful of programs on the
symmetric hull Q = conv{+-x_i}:

  * gauge_polytope     -- min total weight writing y as a hull combination (LP)
  * support_polytope   -- max_i |<x_i, d>| (closed form)
  * hull distance      -- dist(w, a*Q), batched projected-gradient with
                          certified two-sided bounds from Fenchel duality,
                          plus an exact min-norm-point escalation
  * hull_ball_gauge    -- h_{wq*Q° ∩ wb*B}(v) = min_s [wq*s + wb*dist(v, s*Q)],
                          a 1-D convex search whose every iterate yields a
                          certified upper bound and a feasible dual point
                          (hence a certified lower bound)
  * support_polar_cap  -- the spec'd public face of hull_ball_gauge
  * membership_bisect  -- Inside/Boundary/Outside bands around gauge = 1

The certified-bounds discipline is what lets membership tests, chord finding
and hardness checks stop early: a point is done as soon as its bracket clears
the threshold it is being compared against, not when some residual is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
from scipy.optimize import linprog

from .errors import IterationLimit


class Membership(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass
class ToleranceSpec:
    """Shared tolerance contract for iterative kernels."""

    feasibility_tol: float = 1e-9
    bisection_tol: float = 1e-10
    max_iterations: int = 10_000

    def __post_init__(self) -> None:
        if not (self.feasibility_tol > 0 and self.bisection_tol > 0
                and self.max_iterations > 0):
            raise ValueError("tolerances and iteration budget must be positive")


DEFAULT_TOL = ToleranceSpec()


@dataclass
class GeneratorPolytope:
    """conv(generators), or conv(+-generators) when symmetric."""

    generators: np.ndarray  # (k, n)
    symmetric: bool = True
    _rank: int | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.generators = np.atleast_2d(np.asarray(self.generators, dtype=np.float64))
        if self.generators.shape[0] < 1:
            raise ValueError("need at least one generator")

    @property
    def rank(self) -> int:
        # Recorded, not enforced: full rank is what makes 0 interior for
        # symmetric hulls.
        if self._rank is None:
            self._rank = int(np.linalg.matrix_rank(self.generators))
        return self._rank


class HullData:
    """Precomputations for conv{+-x_i} shared by all kernels on one system."""

    def __init__(self, vectors: np.ndarray):
        X = np.ascontiguousarray(np.atleast_2d(vectors), dtype=np.float64)
        self.X = X
        self.m, self.n = X.shape
        self.norms = np.linalg.norm(X, axis=1) if self.m else np.zeros(0)
        self.max_norm = float(self.norms.max()) if self.m else 0.0
        self.caps = np.where(self.norms > 1.0)[0]
        # caps empty <=> Q ⊆ B <=> Q°∩B = B: the ball fast paths apply.
        self.caps_empty = self.caps.size == 0
        self.lipschitz = self._spectral_sq()

    def _spectral_sq(self) -> float:
        """Upper-ish estimate of sigma_max(X)^2 for gradient step sizes."""
        if self.m == 0 or self.max_norm == 0.0:
            return 1.0
        rng = np.random.Generator(np.random.Philox(key=np.array([0x5EED, 0x11], np.uint64)))
        v = rng.standard_normal(self.n)
        v /= np.linalg.norm(v)
        est = 1.0
        for _ in range(40):
            w = self.X @ v
            v = self.X.T @ w
            nv = np.linalg.norm(v)
            if nv == 0.0:
                break
            est = nv
            v /= nv
        # 4% headroom: certificates never depend on this, only step sizes do.
        return float(max(est * 1.04, 1e-30))

    def support(self, D: np.ndarray) -> np.ndarray:
        """h_Q rows of D: max_i |<x_i, d>| (0 when m = 0)."""
        D = np.atleast_2d(D)
        if self.m == 0:
            return np.zeros(D.shape[0])
        return np.abs(D @ self.X.T).max(axis=1)


# ---------------------------------------------------------------------------
# Batched distance to a*Q with certified bounds.
# ---------------------------------------------------------------------------

@dataclass
class DistanceBounds:
    """Certified dist(w_p, a_p*Q) ∈ [lb_p, ub_p] with the achieving weights."""

    lb: np.ndarray
    ub: np.ndarray
    weights: np.ndarray    # (B, m): ub is ||w - weights @ X|| with ||weights||_1 <= a
    residual: np.ndarray   # (B, n): w - weights @ X


def project_l1_ball(V: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto {c : ||c||_1 <= radius}."""
    V = np.atleast_2d(V)
    radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (V.shape[0],))
    absV = np.abs(V)
    l1 = absV.sum(axis=1)
    inside = l1 <= radius
    out = V.copy()
    todo = np.where(~inside)[0]
    if todo.size:
        A = absV[todo]
        r = np.maximum(radius[todo], 0.0)
        U = -np.sort(-A, axis=1)
        css = np.cumsum(U, axis=1) - r[:, None]
        ks = np.arange(1, A.shape[1] + 1)
        cond = U - css / ks > 0.0
        rho = cond.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
        theta = css[np.arange(todo.size), rho] / (rho + 1.0)
        out[todo] = np.sign(V[todo]) * np.maximum(A - theta[:, None], 0.0)
    return out


def _certify(hull: HullData, W: np.ndarray, a: np.ndarray,
             C: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lb, ub, residual) at weights C.

    ub = ||w - C X|| is feasible. lb comes from weak duality: for any g,
    dist >= (<g, w> - a*h_Q(g) - ||g||^2/2) * sqrt-lifted; with g = residual
    this is tight at the optimum.
    """
    G = W - C @ hull.X if hull.m else W.copy()
    ub = np.linalg.norm(G, axis=1)
    hq = hull.support(G)
    dual = (G * W).sum(axis=1) - a * hq - 0.5 * ub ** 2
    lb = np.sqrt(2.0 * np.maximum(dual, 0.0))
    lb = np.minimum(lb, ub)
    return lb, ub, G


def hull_distance_batch(hull: HullData, W: np.ndarray, a: np.ndarray | float, *,
                        need: np.ndarray | None = None, band: float = 0.0,
                        need_low: np.ndarray | None = None,
                        rel_tol: float = 1e-9, abs_tol: float = 1e-12,
                        max_iter: int = 4000, warm: np.ndarray | None = None,
                        exact_fallback: bool = True) -> DistanceBounds:
    """Certified dist(w_p, a_p*Q) for every row w_p of W.

    Accelerated projected gradient on the weights with duality-gap
    certificates; a row stops once its bracket [lb, ub] has width below
    max(abs_tol, rel_tol*ub) or, when `need` is given, once the bracket
    clears need_p by more than `band` on either side. `need_low` replaces
    need on the inner side when the two decision thresholds differ. Rows
    still ambiguous at the iteration cap escalate to the exact
    min-norm-point solver.
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    B = W.shape[0]
    a = np.maximum(np.broadcast_to(np.asarray(a, dtype=np.float64), (B,)), 0.0)
    C_out = np.zeros((B, hull.m))
    if warm is not None and hull.m:
        C_out = project_l1_ball(np.asarray(warm, dtype=np.float64).reshape(B, hull.m), a)

    if hull.m == 0 or hull.max_norm == 0.0 or not np.any(a > 0):
        nval = np.linalg.norm(W, axis=1)
        return DistanceBounds(lb=nval, ub=nval.copy(),
                              weights=np.zeros((B, hull.m)), residual=W.copy())

    lb_out, ub_out, G_out = _certify(hull, W, a, C_out)
    needv = None if need is None else np.broadcast_to(np.asarray(need, float), (B,))
    needlo = needv if need_low is None else \
        np.broadcast_to(np.asarray(need_low, float), (B,))

    def resolved(lb, ub, idx):
        done = (ub - lb) <= np.maximum(abs_tol, rel_tol * ub)
        if needv is not None:
            done |= (lb > needv[idx] + band) | (ub < needlo[idx] - band)
        return done

    active = np.where(~resolved(lb_out, ub_out, np.arange(B)))[0]
    if active.size == 0:
        return DistanceBounds(lb_out, ub_out, C_out, G_out)

    invL = 1.0 / hull.lipschitz
    Wa, aa = W[active], a[active]
    C = C_out[active]
    Cp = C.copy()
    t_prev = 1.0
    check = 6
    it = 0
    while it < max_iter and active.size:
        for _ in range(check):
            it += 1
            t_cur = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_prev * t_prev))
            Y = C + ((t_prev - 1.0) / t_cur) * (C - Cp)
            Gy = Wa - Y @ hull.X
            grad = Gy @ hull.X.T
            Cn = project_l1_ball(Y + invL * grad, aa)
            Cp, C, t_prev = C, Cn, t_cur
        lb, ub, G = _certify(hull, Wa, aa, C)
        improve = ub < ub_out[active]
        upd = active[improve]
        ub_out[upd] = ub[improve]
        C_out[upd] = C[improve]
        G_out[upd] = G[improve]
        lb_out[active] = np.maximum(lb_out[active], lb)
        done = resolved(lb_out[active], ub_out[active], active)
        if np.any(done):
            keep = ~done
            active = active[keep]
            Wa, aa, C, Cp = Wa[keep], aa[keep], C[keep], Cp[keep]
            t_prev = 1.0
        check = min(check * 2, 64)

    if active.size and exact_fallback:
        for p in active:
            d, g, c = _min_norm_point(hull, W[p], a[p])
            lb_out[p] = max(lb_out[p], d)
            if d < ub_out[p]:
                ub_out[p] = d
                G_out[p] = g
                C_out[p] = c
            lb_out[p] = min(lb_out[p], ub_out[p])
    return DistanceBounds(lb_out, ub_out, C_out, G_out)


def _min_norm_point(hull: HullData, w: np.ndarray, a: float,
                    tol: float = 1e-13, max_iter: int = 10_000
                    ) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact dist(w, a*Q) via Wolfe's min-norm-point over {w - a*sigma*x_i}.

    Returns (distance, residual point p, hull weights c with w - c@X = p).
    """
    X = hull.X
    if a <= 0.0 or hull.m == 0:
        return float(np.linalg.norm(w)), w.copy(), np.zeros(hull.m)

    def lmo(g: np.ndarray) -> tuple[int, float]:
        s = X @ g
        i = int(np.argmax(np.abs(s)))
        return i, float(np.sign(s[i]) if s[i] != 0.0 else 1.0)

    i0, s0 = lmo(w)
    S = [(i0, s0)]
    V = [w - a * s0 * X[i0]]
    lam = np.array([1.0])
    p = V[0].copy()
    scale = max(1.0, float(np.linalg.norm(w)), a * hull.max_norm)
    for _ in range(max_iter):
        i, s = lmo(p)
        v = w - a * s * X[i]
        if float(p @ p) - float(p @ v) <= tol * scale * scale:
            break
        S.append((i, s))
        V.append(v)
        lam = np.append(lam, 0.0)
        # minor cycles: affine min-norm over current set, drop until feasible
        for _ in range(len(S) + 50):
            A = np.asarray(V)
            k = A.shape[0]
            M = np.empty((k + 1, k + 1))
            M[:k, :k] = A @ A.T
            M[k, :k] = 1.0
            M[:k, k] = 1.0
            M[k, k] = 0.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            try:
                sol = np.linalg.solve(M + np.eye(k + 1) * 1e-14, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
            alpha = sol[:k]
            if np.all(alpha >= -1e-14):
                lam = np.maximum(alpha, 0.0)
                lam /= lam.sum()
                break
            neg = alpha < lam
            theta = np.min(np.where(neg, lam / np.maximum(lam - alpha, 1e-300), np.inf))
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (alpha - lam)
            lam[lam < 1e-15] = 0.0
            keep = lam > 0.0
            if not np.any(keep):
                keep[int(np.argmax(alpha))] = True
            S = [S[j] for j in range(k) if keep[j]]
            V = [V[j] for j in range(k) if keep[j]]
            lam = lam[keep]
            lam /= lam.sum()
        p = lam @ np.asarray(V)
    c = np.zeros(hull.m)
    for (i, s), l in zip(S, lam):
        c[i] += a * s * l
    return float(np.linalg.norm(p)), p, c


# ---------------------------------------------------------------------------
# The 1-D kernel: h_{wq*Q° ∩ wb*B}(v) = min_{s>=0} [wq*s + wb*dist(v, s*Q)].
# ---------------------------------------------------------------------------

@dataclass
class GaugeBounds:
    """Certified value bracket plus the best feasible dual point found.

    witness rows z satisfy ||z|| <= wb and h_Q(z) <= wq exactly, and
    lb = <v, z>; so lb is a true lower bound regardless of solve quality.
    """

    lb: np.ndarray
    ub: np.ndarray
    witness: np.ndarray
    split_s: np.ndarray   # the hull share s at the best upper bound
    weights: np.ndarray   # hull weights achieving the best upper bound


def hull_ball_gauge_batch(hull: HullData, V: np.ndarray, wq: float, wb: float, *,
                          need: np.ndarray | None = None, band: float = 0.0,
                          rel_tol: float = 1e-9, abs_tol: float = 1e-12,
                          rounds: int = 60, inner_iter: int = 260) -> GaugeBounds:
    """Support of wq*Q° ∩ wb*B, equally the gauge of conv(Q/wq ∪ B/wb).

    Convex 1-D search in the hull share s. Each probe returns a certified
    upper bound wq*s + wb*dist_ub and a feasible dual point built from the
    residual direction, so both sides of the bracket are certified at every
    round. Rows stop once the bracket is tight or clears `need` by `band`.
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    B = V.shape[0]
    nv = np.linalg.norm(V, axis=1)
    ub = wb * nv                      # s = 0 endpoint, always feasible
    lb = np.zeros(B)
    witness = np.zeros_like(V)
    split = np.zeros(B)
    weights = np.zeros((B, hull.m))

    if hull.m == 0 or hull.max_norm == 0.0:
        # Q = {0}: the intersection is the wb ball.
        scale = np.divide(wb, np.maximum(nv, 1e-300))
        witness = V * scale[:, None]
        return GaugeBounds(lb=ub.copy(), ub=ub, witness=witness, split_s=split,
                           weights=weights)
    if wb * hull.max_norm <= wq:
        # wb*B ⊆ wq*Q°: the ball constraint is the only active one.
        scale = np.divide(wb, np.maximum(nv, 1e-300))
        witness = V * scale[:, None]
        return GaugeBounds(lb=ub.copy(), ub=ub.copy(), witness=witness,
                           split_s=split, weights=weights)

    needv = None if need is None else np.broadcast_to(np.asarray(need, float), (B,))
    lo = np.zeros(B)
    hi = wb * nv / wq + 1e-30         # optimum s never exceeds f(0)/wq
    C = np.zeros((B, hull.m))
    active = np.where(nv > 0.0)[0]

    def lower_from_dir(G: np.ndarray, rows: np.ndarray) -> None:
        ng = np.linalg.norm(G, axis=1)
        ok = ng > 1e-300
        if not np.any(ok):
            return
        R = G[ok] / ng[ok][:, None]
        hq = hull.support(R)
        scale = np.where(wb * hq <= wq, wb, wq / np.maximum(hq, 1e-300))
        Z = R * scale[:, None]
        cand = (V[rows[ok]] * Z).sum(axis=1)
        take = cand > lb[rows[ok]]
        upd = rows[ok][take]
        lb[upd] = cand[take]
        witness[upd] = Z[take]

    for _ in range(rounds):
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        res = hull_distance_batch(hull, V[active], mid,
                                  rel_tol=max(rel_tol * 0.1, 1e-12),
                                  abs_tol=abs_tol * 0.1,
                                  max_iter=inner_iter, warm=C[active],
                                  exact_fallback=False)
        C[active] = res.weights
        cand_ub = wq * mid + wb * res.ub
        take = cand_ub < ub[active]
        upd = active[take]
        ub[upd] = cand_ub[take]
        split[upd] = mid[take]
        weights[upd] = res.weights[take]
        lower_from_dir(res.residual, active)
        # derivative sign: f'(s) = wq - wb*h_Q(residual direction). A
        # residual at numerical-zero scale means v ∈ mid*Q; the true
        # subgradient there is 0, f' = wq > 0, so the optimum lies left,
        # whatever direction the solver's noise-level residual points in.
        ng = np.linalg.norm(res.residual, axis=1)
        interior = ng <= np.maximum(abs_tol, 1e-12 * (1.0 + nv[active]))
        hq = hull.support(res.residual / np.maximum(ng, 1e-300)[:, None])
        go_right = (wb * hq > wq) & ~interior
        lo[active] = np.where(go_right, mid, lo[active])
        hi[active] = np.where(go_right, hi[active], mid)
        gap_ok = (ub[active] - lb[active]) <= np.maximum(abs_tol, rel_tol * ub[active])
        if needv is not None:
            nv_ = needv[active]
            gap_ok |= (lb[active] > nv_ + band) | (ub[active] < nv_ - band)
        active = active[~gap_ok]
    lb = np.minimum(lb, ub)
    return GaugeBounds(lb=lb, ub=ub, witness=witness, split_s=split, weights=weights)


# ---------------------------------------------------------------------------
# Public spec operations.
# ---------------------------------------------------------------------------

def gauge_polytope(P: GeneratorPolytope, y: np.ndarray,
                   tol: ToleranceSpec = DEFAULT_TOL) -> float:
    """min{t >= 0 : y ∈ t * conv(generators [∪ -generators])} by LP.

    Returns +inf when y is outside the span (infeasible program).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    G = P.generators
    if not np.any(y):
        return 0.0
    if P.symmetric:
        # min ||c||_1 s.t. G^T c = y, via c = cp - cm, cp, cm >= 0.
        k = G.shape[0]
        A_eq = np.hstack([G.T, -G.T])
        cost = np.ones(2 * k)
    else:
        k = G.shape[0]
        A_eq = G.T
        cost = np.ones(k)
    res = linprog(cost, A_eq=A_eq, b_eq=y, bounds=(0, None), method="highs",
                  options={"presolve": True})
    if res.status == 2:     # infeasible: y outside the span/cone
        return math.inf
    if res.status != 0:
        raise IterationLimit(f"gauge LP did not converge (status {res.status})")
    return float(max(res.fun, 0.0))


def support_polytope(P: GeneratorPolytope, d: np.ndarray) -> float:
    """max over (+-)generators of <g, d>."""
    d = np.asarray(d, dtype=np.float64).ravel()
    vals = P.generators @ d
    if P.symmetric:
        return float(np.abs(vals).max())
    return float(vals.max())


def support_polar_cap(system, radius: float, d: np.ndarray,
                      tol: ToleranceSpec = DEFAULT_TOL) -> float:
    """h_{Q° ∩ radius*B}(d); fold any t-scaling into the system's vectors.

    The returned value never exceeds min(gauge_Q(d), radius*||d||): both
    trivial splits are explicit candidates.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = np.asarray(d, dtype=np.float64).ravel()
    hull = _hull_of(system)
    res = hull_ball_gauge_batch(hull, d[None, :], 1.0, float(radius),
                                rel_tol=tol.bisection_tol * 10, abs_tol=tol.bisection_tol,
                                rounds=80, inner_iter=tol.max_iterations)
    value = float(res.ub[0])
    g = gauge_polytope(GeneratorPolytope(hull.X, symmetric=True), d, tol)
    if math.isfinite(g):
        value = min(value, g)
    return min(value, float(radius * np.linalg.norm(d)))


class GaugeEvaluable(Protocol):
    def gauge(self, y: np.ndarray) -> float: ...


def membership_bisect(oracle: GaugeEvaluable, y: np.ndarray, tol: float) -> Membership:
    """Classify by the gauge: Inside <= 1 - tol < Boundary < 1 + tol <= Outside."""
    g = oracle.gauge(y)
    if g <= 1.0 - tol:
        return Membership.INSIDE
    if g >= 1.0 + tol:
        return Membership.OUTSIDE
    return Membership.BOUNDARY


def _hull_of(system) -> HullData:
    if isinstance(system, HullData):
        return system
    if hasattr(system, "hull_data"):
        return system.hull_data()
    return HullData(np.asarray(system, dtype=np.float64))
