"""Monte-Carlo estimators over body oracles: Gaussian mean width, volume
ratios, Urysohn-type bounds, hit-and-run uniform sampling, and hit-fraction
volume estimation.

All estimators draw from (seed, label)-keyed streams in fixed blocks and
reduce partial sums in block order, so every Estimate is byte-identical for
any worker count. Comparative estimates default to common random numbers:
two estimates with the same (seed, label, n_samples) see the same points,
which turns containment inequalities into sample-wise inequalities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import streams
from .errors import (ChordDegenerate, ContainmentViolated, InvalidConfig,
                     StartNotInterior)
from .solver import _hull_of

CODE_INSIDE = np.int8(-1)


@dataclass
class Estimate:
    """A Monte-Carlo value with its standard error and stream identity."""

    value: float
    stderr: float
    n_samples: int
    stream_id: tuple[int, str]
    support_upper_bound: bool = False   # any support value was only certified-upper

    def __post_init__(self) -> None:
        if self.stderr < 0 or self.n_samples < 1:
            raise InvalidConfig("estimate needs stderr >= 0 and n_samples >= 1")

    def to_json(self) -> str:
        return json.dumps({
            "value": float(f"{self.value:.17g}"),
            "stderr": float(f"{self.stderr:.17g}"),
            "n_samples": self.n_samples,
            "seed": self.stream_id[0],
            "label": self.stream_id[1],
        })


@dataclass
class ChainConfig:
    """Hit-and-run chain parameters; None fields resolve against the body dim.

    Defaults (burn-in 10*dim^2, thinning dim) are heuristics tuned for
    dim <= 64; check effective_sample_size on the output when in doubt.
    """

    burn_in: Optional[int] = None       # default 10 * dim^2
    thinning: Optional[int] = None      # default dim
    start: Optional[np.ndarray] = None  # default 0 after an interior check
    n_chains: int = 16

    def __post_init__(self) -> None:
        if self.burn_in is not None and self.burn_in < 1:
            raise InvalidConfig("burn_in must be >= 1")
        if self.thinning is not None and self.thinning < 1:
            raise InvalidConfig("thinning must be >= 1")
        if self.n_chains < 1:
            raise InvalidConfig("n_chains must be >= 1")

    def resolve(self, dim: int) -> tuple[int, int]:
        burn = self.burn_in if self.burn_in is not None else 10 * dim * dim
        thin = self.thinning if self.thinning is not None else dim
        return burn, thin


# ---------------------------------------------------------------------------
# Reference samplers.
# ---------------------------------------------------------------------------

def sphere_block(seed: int, label: str, bi: int, count: int, dim: int,
                 radius: float = 1.0) -> np.ndarray:
    G = streams.gaussian_block(seed, label, bi, (count, dim))
    G /= np.maximum(np.linalg.norm(G, axis=1, keepdims=True), 1e-300)
    return radius * G


def ball_block(seed: int, label: str, bi: int, count: int, dim: int,
               radius: float = 1.0) -> np.ndarray:
    P = sphere_block(seed, label, bi, count, dim)
    U = streams.uniform_block(seed, label + "/r", bi, (count,))
    return radius * P * (U ** (1.0 / dim))[:, None]


def ball_volume(dim: int, radius: float = 1.0) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) * radius ** dim


def reference_volume(oracle) -> Optional[float]:
    """Closed-form volume for the reference fixtures (balls and boxes)."""
    desc = oracle.descriptor
    if desc.kind == "Ball":
        return ball_volume(oracle.dimension, desc.params["r"])
    if desc.kind == "Box":
        lo = np.asarray(desc.params["lo"])
        hi = np.asarray(desc.params["hi"])
        return float(np.prod(hi - lo))
    return None


def _reference_block(oracle, seed: int, label: str, bi: int, count: int) -> np.ndarray:
    desc = oracle.descriptor
    if desc.kind == "Ball":
        pts = ball_block(seed, label, bi, count, oracle.dimension, desc.params["r"])
        return pts + oracle.interior_point
    if desc.kind == "Box":
        lo = np.asarray(desc.params["lo"])
        hi = np.asarray(desc.params["hi"])
        U = streams.uniform_block(seed, label, bi, (count, oracle.dimension))
        return lo + U * (hi - lo)
    raise InvalidConfig(f"no uniform sampler for reference kind {desc.kind!r}")


# ---------------------------------------------------------------------------
# Width and volume estimators.
# ---------------------------------------------------------------------------

def mean_width(oracle, n_samples: int, seed: int,
               label: str = "mean_width") -> Estimate:
    """E h_L(G) over standard Gaussian G, with standard error.

    Shares the stream across bodies: two calls with equal (seed, label,
    n_samples) evaluate supports on identical Gaussians.
    """
    dim = oracle.dimension

    def blk(bi: int, lo: int, hi: int):
        G = streams.gaussian_block(seed, label, bi, (hi - lo, dim))
        v = oracle.support_values(G)
        return float(v.sum()), float(v @ v), hi - lo

    parts = streams.map_blocks(blk, n_samples)
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s / n_samples
    var = max(s2 - n_samples * mean * mean, 0.0) / max(n_samples - 1, 1)
    return Estimate(value=mean, stderr=math.sqrt(var / n_samples),
                    n_samples=n_samples, stream_id=(seed, label),
                    support_upper_bound=oracle.support_certified_upper)


def volume_ratio_qt_polar(system, t: float, n_samples: int, seed: int) -> Estimate:
    """|Q_t°|/|B| = P(max_i |<x_i, Y>| <= t) for Y uniform in the unit ball."""
    if not t > 0:
        raise InvalidConfig(f"t must be positive, got {t}")
    hull = _hull_of(system)
    label = "qt_polar_ratio"

    def blk(bi: int, lo: int, hi: int):
        Y = ball_block(seed, label, bi, hi - lo, hull.n)
        if hull.m == 0:
            return hi - lo
        hits = np.abs(Y @ hull.X.T).max(axis=1) <= t
        return int(hits.sum())

    parts = streams.map_blocks(blk, n_samples)
    hits = int(sum(parts))
    p = hits / n_samples
    return Estimate(value=p, stderr=math.sqrt(max(p * (1.0 - p), 0.0) / n_samples),
                    n_samples=n_samples, stream_id=(seed, label))


def urysohn_bound(oracle, n_samples: int, seed: int) -> Estimate:
    """(w_G(L)/w_G(B))^dim as a volume-ratio upper bound, delta-method stderr.

    Both widths are evaluated on the same Gaussians, so covariance is
    estimated from the paired samples instead of assumed away.
    """
    dim = oracle.dimension
    label = "urysohn"

    def blk(bi: int, lo: int, hi: int):
        G = streams.gaussian_block(seed, label, bi, (hi - lo, dim))
        u = oracle.support_values(G)
        v = np.linalg.norm(G, axis=1)
        return (float(u.sum()), float(v.sum()), float(u @ u), float(v @ v),
                float(u @ v))

    parts = streams.map_blocks(blk, n_samples)
    su = sum(p[0] for p in parts)
    sv = sum(p[1] for p in parts)
    suu = sum(p[2] for p in parts)
    svv = sum(p[3] for p in parts)
    suv = sum(p[4] for p in parts)
    N = n_samples
    a, b = su / N, sv / N
    denom = max(N - 1, 1)
    var_a = max(suu - N * a * a, 0.0) / denom
    var_b = max(svv - N * b * b, 0.0) / denom
    cov = (suv - N * a * b) / denom
    r = a / b
    bound = r ** dim
    # gradient of (a/b)^dim at the sample means
    ga = dim * r ** (dim - 1) / b
    gb = -dim * r ** dim / b
    var_bound = (ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov) / N
    return Estimate(value=bound, stderr=math.sqrt(max(var_bound, 0.0)),
                    n_samples=N, stream_id=(seed, label),
                    support_upper_bound=oracle.support_certified_upper)


def volume_mc(oracle, reference, n_samples: int, seed: int,
              tol: float = 1e-9) -> Estimate:
    """|oracle| = hit fraction x |reference|; reference must contain oracle."""
    if reference.dimension != oracle.dimension:
        raise InvalidConfig("oracle and reference dimensions differ")
    vol_ref = reference_volume(reference)
    if vol_ref is None:
        raise InvalidConfig(
            f"reference kind {reference.descriptor.kind!r} has no known volume")
    label = "volume_mc"

    def blk(bi: int, lo: int, hi: int):
        P = _reference_block(reference, seed, label, bi, hi - lo)
        codes = oracle.membership_codes(P, tol)
        hits = codes <= 0
        if np.any(hits & (reference.membership_codes(P, tol) > 0)):
            raise ContainmentViolated(
                "a point inside the oracle fell outside the reference body")
        return int(hits.sum())

    parts = streams.map_blocks(blk, n_samples)
    p = int(sum(parts)) / n_samples
    return Estimate(value=p * vol_ref,
                    stderr=vol_ref * math.sqrt(max(p * (1.0 - p), 0.0) / n_samples),
                    n_samples=n_samples, stream_id=(seed, label))


# ---------------------------------------------------------------------------
# Hit-and-run.
# ---------------------------------------------------------------------------

def hit_and_run(oracle, chain: ChainConfig | None, n_points: int, seed: int,
                label: str = "har") -> np.ndarray:
    """Approximately uniform points from a membership oracle.

    Chains advance in lockstep as one batched walk: per step, each chain
    draws a direction, the chord through its current point is computed
    (exact chord hooks when the body provides them, membership root-finding
    otherwise), and a uniform point on the chord is taken. Lockstep keeps
    the stream consumption order fixed, so output is worker-independent.
    """
    if n_points < 1:
        raise InvalidConfig("n_points must be >= 1")
    cfg = chain if chain is not None else ChainConfig()
    dim = oracle.dimension
    burn, thin = cfg.resolve(dim)
    start = np.zeros(dim) if cfg.start is None else \
        np.asarray(cfg.start, dtype=np.float64).ravel()
    if int(oracle.membership_codes(start[None, :], 1e-12)[0]) != CODE_INSIDE:
        raise StartNotInterior("hit-and-run start point is not strictly inside")
    C = min(cfg.n_chains, n_points)
    per = -(-n_points // C)
    steps = burn + per * thin
    pos = np.tile(start, (C, 1))
    out = np.empty((C, per, dim))
    SBLK = 64                                    # steps per stream block
    dirs = us = None
    for step in range(steps):
        k = step % SBLK
        if k == 0:
            bi = step // SBLK
            dirs = streams.gaussian_block(seed, label + "/d", bi, (SBLK, C, dim))
            us = streams.uniform_block(seed, label + "/u", bi, (SBLK, C))
        d = dirs[k]
        d = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        # walk steps tolerate a coarser chord than boundary projection does:
        # endpoint error enters the uniform draw as O(tol) bias only
        t_lo, t_hi = _chord(oracle, pos, d, tol=1e-6)
        if np.any(t_hi - t_lo < 1e-12):
            raise ChordDegenerate("chord length below 1e-12")
        pos = pos + (t_lo + us[k] * (t_hi - t_lo))[:, None] * d
        rel = step - burn
        if rel >= 0 and rel % thin == thin - 1:
            out[:, rel // thin, :] = pos
    return out.reshape(C * per, dim)[:n_points]


def _chord(oracle, O: np.ndarray, D: np.ndarray,
           tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    if oracle.chord_fn is not None:
        return oracle.chord_fn(O, D, tol)
    if oracle.gauge_fn is not None:
        return _chord_via_gauge(oracle, O, D, tol=tol)
    return _chord_via_membership(oracle, O, D, tol)


def _chord_via_gauge(oracle, O: np.ndarray, D: np.ndarray,
                     iters: int = 48,
                     tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Roots of gauge(o + t d) = 1 by bracketed regula falsi (gauge convex)."""
    B = O.shape[0]
    edges = np.empty((2, B))
    for side, sign in ((0, -1.0), (1, 1.0)):
        t_hi = np.full(B, sign)
        for _ in range(80):                      # bracket: grow until outside
            g = oracle.gauge_fn(O + t_hi[:, None] * D)
            grow = g <= 1.0
            if not np.any(grow):
                break
            t_hi[grow] *= 2.0
            if np.any(np.abs(t_hi) > 1e12):
                raise InvalidConfig("chord is unbounded along a sampled direction")
        t_lo = np.zeros(B)
        g_lo = oracle.gauge_fn(O) - 1.0
        g_hi = oracle.gauge_fn(O + t_hi[:, None] * D) - 1.0
        for it in range(iters):
            width = np.abs(t_hi - t_lo)
            live = width > 0.1 * tol * np.maximum(np.abs(t_hi), 1.0)
            if not np.any(live):
                break
            t_new = (t_lo * g_hi - t_hi * g_lo) / (g_hi - g_lo)
            if it % 3 == 2:
                t_new = 0.5 * (t_lo + t_hi)
            frac = np.abs(t_new - t_lo) / np.maximum(width, 1e-300)
            t_new = np.where((frac < 0.02) | (frac > 0.98),
                             0.5 * (t_lo + t_hi), t_new)
            g_new = oracle.gauge_fn(O + t_new[:, None] * D) - 1.0
            inside = g_new <= 0.0
            upd = live & inside
            t_lo[upd], g_lo[upd] = t_new[upd], g_new[upd]
            upd = live & ~inside
            t_hi[upd], g_hi[upd] = t_new[upd], g_new[upd]
        edges[side] = t_lo
    return edges[0], edges[1]


def _chord_via_membership(oracle, O: np.ndarray, D: np.ndarray,
                          tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Bisection on membership codes; needs a finite outer radius."""
    if not math.isfinite(oracle.outer_radius):
        raise InvalidConfig("membership-only chord needs a finite outer radius")
    B = O.shape[0]
    reach = (np.linalg.norm(O, axis=1) + oracle.outer_radius + 1.0) \
        / np.maximum(np.linalg.norm(D, axis=1), 1e-300)
    edges = np.empty((2, B))
    for side, sign in ((0, -1.0), (1, 1.0)):
        t_in = np.zeros(B)
        t_out = sign * reach
        for _ in range(64):
            mid = 0.5 * (t_in + t_out)
            inside = oracle.membership_codes(O + mid[:, None] * D, tol) == CODE_INSIDE
            t_in = np.where(inside, mid, t_in)
            t_out = np.where(inside, t_out, mid)
            if np.all(np.abs(t_out - t_in) <= 0.1 * tol * np.maximum(np.abs(t_in), 1.0)):
                break
        edges[side] = t_in
    return edges[0], edges[1]


def effective_sample_size(values: np.ndarray) -> float:
    """Initial-positive-sequence autocorrelation ESS, min over coordinates."""
    V = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if V.shape[0] == 1:
        V = V.T
    N = V.shape[0]
    if N < 4:
        return float(N)
    ess = []
    for j in range(V.shape[1]):
        x = V[:, j] - V[:, j].mean()
        denom = float(x @ x)
        if denom <= 0.0:
            ess.append(float(N))
            continue
        acc = 0.0
        for lag in range(1, N // 2):
            rho = float(x[:-lag] @ x[lag:]) / denom
            if rho <= 0.0:
                break
            acc += rho
        ess.append(N / (1.0 + 2.0 * acc))
    return float(min(ess))
