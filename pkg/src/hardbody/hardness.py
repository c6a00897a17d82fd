"""Separation certificates for the lifted hull family.

The vertices (1-eta)e0 + sigma*x_i of K(eta, kappa) come paired with test
vectors (-2*sqrt(n)/delta)e0 + sigma*x_i whose inner products against the
vertex set are large on the matching index and nonpositive everywhere
else. This module materializes those pairs, checks the inner-product
identities exactly, decomposes points of K into explicit convex
combinations, and turns a candidate approximating polytope into a covering
certificate: every candidate vertex can dominate only a bounded set of
test directions, so full coverage forces a vertex-count lower bound.

All checks are reported, never silently clipped: the certificate records
which indices are covered by which candidate vertex, and the sandwich
verifier separates the sound inner check (membership of every candidate
vertex) from the outer checks, which are necessary conditions only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bodies import (
    CODE_OUTSIDE,
    BodyOracle,
    HardBodyParams,
    LiftedPoint,
    minkowski_decompose,
)
from .design import QuasiOrthogonalSystem
from .errors import EtaTooLarge, InvalidConfig, NotInBody
from .streams import gaussian_block

__all__ = [
    "TestVectorPair",
    "SeparationReport",
    "VertexDecomposition",
    "CandidatePolytope",
    "CoveringConclusion",
    "CoveringCertificate",
    "SandwichReport",
    "HardnessConstants",
    "test_vectors",
    "separation_report",
    "decompose_vertex",
    "covering_certificate",
    "verify_sandwich",
    "hardness_constants",
]


# ---------------------------------------------------------------------------
# Test vector pairs.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestVectorPair:
    """Vertex x+ = (1-eta, sigma*x_i) with its test vector x-."""

    index: int
    sign: int
    plus: LiftedPoint
    minus: LiftedPoint


def _check_eta_half(eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 0.5:
        raise EtaTooLarge(f"test vectors need 0 <= eta <= 1/2, got {eta}")
    return eta


def test_vectors(system: QuasiOrthogonalSystem, eta: float, index: int,
                 sign: int = 1) -> TestVectorPair:
    """The (index, sign) vertex of K(eta, .) and its separating direction.

    The test vector sits at height -2*sqrt(n)/delta so that its inner
    product with the matching vertex is ||x_i||^2 - 2(1-eta)sqrt(n)/delta
    while every other vertex scores nonpositively.
    """
    eta = _check_eta_half(eta)
    if sign not in (-1, 1):
        raise InvalidConfig(f"sign must be -1 or +1, got {sign}")
    if not 0 <= index < system.m:
        raise InvalidConfig(f"index {index} out of range for m={system.m}")
    x = sign * system.vectors[index]
    drop = -2.0 * math.sqrt(system.n) / system.delta
    return TestVectorPair(
        index=int(index),
        sign=int(sign),
        plus=LiftedPoint(1.0 - eta, x.copy()),
        minus=LiftedPoint(drop, x.copy()),
    )


def _vertex_matrices(system: QuasiOrthogonalSystem, eta: float
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (2m, n+1) vertex and test-vector arrays.

    Row order is (0,+1), (0,-1), (1,+1), ...; both matrices share it.
    """
    X = system.vectors
    m, n = X.shape
    signed = np.empty((2 * m, n))
    signed[0::2] = X
    signed[1::2] = -X
    drop = -2.0 * math.sqrt(n) / system.delta
    P = np.concatenate([np.full((2 * m, 1), 1.0 - eta), signed], axis=1)
    M = np.concatenate([np.full((2 * m, 1), drop), signed], axis=1)
    return P, M


# ---------------------------------------------------------------------------
# Exact inner-product identities.
# ---------------------------------------------------------------------------

@dataclass
class SeparationReport:
    """Pairwise scores of vertices against test vectors, with checks.

    The identity error compares the assembled inner products against the
    closed forms -2(1-eta)sqrt(n)/delta + sigma_i*sigma_j*<x_i, x_j>,
    relative to max(1, |value|). Diagonal entries (same index and sign)
    must land in [n/(8 delta^2), 4n/delta^2]; the lower end only binds
    once 2*delta/sqrt(n) <= 1/8, which `diag_lower_applicable` records.
    """

    eta: float
    identity_max_rel_error: float
    offdiag_max_value: float
    offdiag_violation_count: int
    diag_values: np.ndarray
    diag_lower: float
    diag_upper: float
    diag_lower_applicable: bool
    diag_range_failures: np.ndarray
    passed: bool


def separation_report(system: QuasiOrthogonalSystem, eta: float,
                      identity_tol: float = 1e-9,
                      block: int = 1024) -> SeparationReport:
    """Check every vertex/test-vector score against its closed form.

    Scores are recomputed from the stacked coordinate arrays and compared
    with the Gram-matrix formula pair by pair; off-diagonal scores must be
    nonpositive and diagonal ones must sit in the designed range.
    """
    eta = _check_eta_half(eta)
    X = system.vectors
    m, n = X.shape
    root = math.sqrt(n) / system.delta
    base = -2.0 * (1.0 - eta) * root
    P, M = _vertex_matrices(system, eta)
    G = X @ X.T
    sign_vec = np.empty(2 * m)
    sign_vec[0::2] = 1.0
    sign_vec[1::2] = -1.0
    idx_vec = np.repeat(np.arange(m), 2)

    max_rel = 0.0
    off_max = -math.inf
    off_viol = 0
    k_all = np.arange(2 * m)
    for lo in range(0, 2 * m, block):
        hi = min(lo + block, 2 * m)
        direct = P[lo:hi] @ M.T
        formula = base + (sign_vec[lo:hi, None] * sign_vec[None, :]) \
            * G[np.ix_(idx_vec[lo:hi], idx_vec)]
        err = np.abs(direct - formula) / np.maximum(1.0, np.abs(formula))
        max_rel = max(max_rel, float(err.max()))
        offd = formula.copy()
        offd[np.arange(hi - lo), k_all[lo:hi]] = -math.inf
        off_max = max(off_max, float(offd.max()))
        off_viol += int(np.count_nonzero(offd > 0.0))

    norms2 = (X * X).sum(axis=1)
    diag = base + norms2
    diag_lower = n / (8.0 * system.delta ** 2)
    diag_upper = 4.0 * n / system.delta ** 2
    lower_applicable = 2.0 * system.delta / math.sqrt(n) <= 0.125
    bad = diag > diag_upper
    if lower_applicable:
        bad |= diag < diag_lower
    failures = np.where(bad)[0]
    passed = (max_rel <= identity_tol) and off_viol == 0 and failures.size == 0
    return SeparationReport(
        eta=eta,
        identity_max_rel_error=max_rel,
        offdiag_max_value=off_max,
        offdiag_violation_count=off_viol,
        diag_values=diag,
        diag_lower=diag_lower,
        diag_upper=diag_upper,
        diag_lower_applicable=lower_applicable,
        diag_range_failures=failures,
        passed=bool(passed),
    )


# ---------------------------------------------------------------------------
# Explicit convex decompositions of points of K(eta, kappa).
# ---------------------------------------------------------------------------

@dataclass
class VertexDecomposition:
    """w = sum lambda_{i,s} x+_{i,s} + lambda_bottom * kappa(-eta*e0 + y).

    All coefficients are nonnegative and sum to one exactly; y is the
    bottom-cap witness with gauge at most 1 up to the solve tolerance.
    """

    eta: float
    kappa: float
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    lambda_bottom: float
    witness: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.lambda_plus.sum() + self.lambda_minus.sum()
                     + self.lambda_bottom)

    def reconstruct(self, system: QuasiOrthogonalSystem) -> np.ndarray:
        """Reassemble the decomposed point in lifted coordinates."""
        X = system.vectors
        hull_mass = float(self.lambda_plus.sum() + self.lambda_minus.sum())
        out = np.empty(system.n + 1)
        out[0] = (1.0 - self.eta) * hull_mass \
            - self.kappa * self.eta * self.lambda_bottom
        out[1:] = (self.lambda_plus - self.lambda_minus) @ X \
            + self.kappa * self.lambda_bottom * self.witness
        return out


def decompose_vertex(w: np.ndarray | LiftedPoint,
                     system: QuasiOrthogonalSystem, eta: float, kappa: float,
                     tol: float = 1e-9) -> VertexDecomposition:
    """Explicit convex decomposition of a point of K(eta, kappa).

    The height pins the total hull mass: with D = (1-eta) + kappa*eta the
    hull share is lam = (w0 + kappa*eta)/D and the bottom cap carries
    1 - lam. The perpendicular part splits through the certified
    Minkowski solve into signed hull weights plus a bottom witness; any
    leftover hull mass is parked on the +-x_1 pair, which cancels in the
    reconstruction. Raises NotInBody when w is certified outside.
    """
    if isinstance(w, LiftedPoint):
        w = w.as_array()
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape[0] != system.n + 1:
        raise InvalidConfig(f"expected a point in R^{system.n + 1}, got {w.shape[0]}")
    eta = float(eta)
    kappa = float(kappa)
    if not 0.0 <= eta < 1.0:
        raise EtaTooLarge(f"eta must be in [0,1), got {eta}")
    if kappa <= 0.0:
        raise InvalidConfig(f"kappa must be positive, got {kappa}")
    lo0, hi0 = -kappa * eta, 1.0 - eta
    w0, wp = float(w[0]), w[1:]
    if max(lo0 - w0, w0 - hi0) > tol:
        raise NotInBody(f"height {w0} outside [{lo0}, {hi0}]")
    D = (1.0 - eta) + kappa * eta
    lam = min(max((w0 + kappa * eta) / D, 0.0), 1.0)
    share = (1.0 - lam) * kappa

    hull = system.hull_data()
    codes, Cw, Bw = minkowski_decompose(hull, wp[None, :], lam, share, tol)
    if codes[0] == CODE_OUTSIDE:
        raise NotInBody("perpendicular part is certified outside its section")
    c, v = Cw[0], Bw[0]
    lam_plus = np.maximum(c, 0.0)
    lam_minus = np.maximum(-c, 0.0)
    used = float(lam_plus.sum() + lam_minus.sum())
    if used > lam and used > 0.0:
        # projection guarantees ||c||_1 <= lam up to roundoff; renormalize
        lam_plus *= lam / used
        lam_minus *= lam / used
        used = lam
    spare = lam - used
    if spare > 0.0 and system.m:
        lam_plus[0] += 0.5 * spare
        lam_minus[0] += 0.5 * spare
    lam_bottom = 1.0 - lam
    if kappa * lam_bottom > 1e-14:
        witness = v / (kappa * lam_bottom)
    else:
        witness = np.zeros(system.n)
    return VertexDecomposition(
        eta=eta,
        kappa=kappa,
        lambda_plus=lam_plus,
        lambda_minus=lam_minus,
        lambda_bottom=lam_bottom,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# Candidate polytopes and covering certificates.
# ---------------------------------------------------------------------------

@dataclass
class CandidatePolytope:
    """A finite vertex list; duplicates within 1e-12 are dropped."""

    vertices: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        V = np.atleast_2d(np.asarray(self.vertices, dtype=np.float64))
        if V.size == 0 or V.shape[0] < 1:
            raise InvalidConfig("a candidate polytope needs at least one vertex")
        keep: list[int] = []
        for i in range(V.shape[0]):
            if all(np.linalg.norm(V[i] - V[j]) > 1e-12 for j in keep):
                keep.append(i)
        self.vertices = np.ascontiguousarray(V[keep])

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]


class CoveringConclusion(Enum):
    LOWER_BOUND_HOLDS = "LowerBoundHolds"
    SANDWICH_VIOLATED = "SandwichViolated"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class CoveringCertificate:
    """Which test indices each candidate vertex dominates, and what follows.

    covering_sets[alpha] lists the indices i with
    <w_alpha, x-_{i,+1}> >= threshold (inclusive, with a 1e-9 absolute
    slack so boundary scores count as covered). A vertex of any polytope
    sandwiched at the designed scale can cover at most per_vertex_bound
    indices, so complete coverage implies at least implied_lower_bound
    vertices; observed_lower_bound is the coarser count m/max|S_alpha|
    actually witnessed by this candidate.
    """

    threshold: float
    covering_sets: list[np.ndarray]
    uncovered: np.ndarray
    per_vertex_bound: float
    implied_lower_bound: float
    observed_lower_bound: float
    conclusion: CoveringConclusion
    claim_sandwich: bool = False

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "covering_sets": [s.tolist() for s in self.covering_sets],
            "uncovered": self.uncovered.tolist(),
            "per_vertex_bound": self.per_vertex_bound,
            "implied_lower_bound": self.implied_lower_bound,
            "observed_lower_bound": self.observed_lower_bound,
            "conclusion": self.conclusion.value,
            "claim_sandwich": self.claim_sandwich,
        }


def covering_certificate(P: CandidatePolytope, system: QuasiOrthogonalSystem,
                         eta: float, kappa: float, *,
                         claim_sandwich: bool = False) -> CoveringCertificate:
    """Score every candidate vertex against every test vector.

    When each index is covered by some candidate vertex the coverage
    counting lower bound applies (LowerBoundHolds). Uncovered indices
    refute a claimed sandwich, because a polytope containing K must
    dominate each test direction at its own vertex; without the claim an
    incomplete covering is simply Inconclusive.
    """
    eta = _check_eta_half(eta)
    kappa = float(kappa)
    if kappa <= 0.0:
        raise InvalidConfig(f"kappa must be positive, got {kappa}")
    W = P.vertices
    if W.shape[1] != system.n + 1:
        raise InvalidConfig(
            f"candidate lives in R^{W.shape[1]}, body in R^{system.n + 1}")
    X = system.vectors
    m, n = X.shape
    drop = -2.0 * math.sqrt(n) / system.delta
    threshold = 12.0 * max(kappa, 1.0)
    # scores[alpha, i] = <w_alpha, x-_{i,+1}>
    scores = W[:, 1:] @ X.T + W[:, :1] * drop
    hit = scores >= threshold - 1e-9
    covering_sets = [np.where(row)[0] for row in hit]
    covered = hit.any(axis=0)
    uncovered = np.where(~covered)[0]
    sizes = [s.size for s in covering_sets]
    max_size = max(sizes) if sizes else 0
    observed = float(math.ceil(m / max_size)) if max_size else math.inf
    delta2 = system.delta ** 2
    if uncovered.size == 0:
        conclusion = CoveringConclusion.LOWER_BOUND_HOLDS
    elif claim_sandwich:
        conclusion = CoveringConclusion.SANDWICH_VIOLATED
    else:
        conclusion = CoveringConclusion.INCONCLUSIVE
    return CoveringCertificate(
        threshold=threshold,
        covering_sets=covering_sets,
        uncovered=uncovered,
        per_vertex_bound=4.0 * n / (9.0 * delta2),
        implied_lower_bound=9.0 * delta2 * m / (4.0 * n),
        observed_lower_bound=observed,
        conclusion=conclusion,
        claim_sandwich=bool(claim_sandwich),
    )


# ---------------------------------------------------------------------------
# Sandwich verification: sound inner check, necessary outer checks.
# ---------------------------------------------------------------------------

@dataclass
class SandwichReport:
    """Evidence for P ⊆ K ⊆ R*P.

    The inner direction is a sound certificate: every candidate vertex is
    run through the membership oracle. The outer direction only checks
    necessary conditions (test-vector domination per index and support
    domination along random directions), so outer_pass means "not
    refuted", not "verified".
    """

    r_value: float
    r_gt_one: bool
    inner_failures: np.ndarray
    inner_pass: bool
    vertex_domination_failures: np.ndarray
    vertex_domination_min_margin: float
    direction_failures: int
    direction_min_margin: float
    n_directions: int
    outer_pass: bool
    passed: bool
    note: str = field(default="outer checks are necessary conditions only")


def verify_sandwich(P: CandidatePolytope, body: BodyOracle, r_value: float,
                    n_directions: int = 256, seed: int = 0,
                    tol: float = 1e-7) -> SandwichReport:
    """Check P ⊆ body exactly and body ⊆ r_value*P on necessary conditions.

    The body must carry its construction parameters (the lifted family
    sets them) so the test vectors are available. Random directions come
    from the (seed, "sandwich") stream; the support comparison uses the
    oracle's certified upper bounds where it has them.
    """
    params = body.source_params
    if not isinstance(params, HardBodyParams):
        raise InvalidConfig("body does not expose its generator system")
    system: QuasiOrthogonalSystem = params.system
    eta = float(params.eta)
    r_value = float(r_value)
    if r_value <= 0.0:
        raise InvalidConfig(f"scale factor must be positive, got {r_value}")
    W = P.vertices
    if W.shape[1] != body.dimension:
        raise InvalidConfig(
            f"candidate lives in R^{W.shape[1]}, body in R^{body.dimension}")

    codes = body.membership_codes(W, tol)
    inner_failures = np.where(codes == CODE_OUTSIDE)[0]
    inner_pass = inner_failures.size == 0

    X = system.vectors
    m, n = X.shape
    drop = -2.0 * math.sqrt(n) / system.delta
    # <w_alpha, x-_{i,+1}> must reach <x+_{i,+1}, x-_{i,+1}> / R for each i
    scores = W[:, 1:] @ X.T + W[:, :1] * drop
    best = scores.max(axis=0)
    diag = -2.0 * (1.0 - eta) * math.sqrt(n) / system.delta + (X * X).sum(axis=1)
    vertex_margin = r_value * best - diag
    vertex_failures = np.where(vertex_margin < -tol)[0]

    direction_failures = 0
    direction_min = math.inf
    if n_directions > 0:
        D = gaussian_block(seed, "sandwich", 0, (int(n_directions), body.dimension))
        norms = np.linalg.norm(D, axis=1)
        D /= np.maximum(norms, 1e-300)[:, None]
        h_body = body.support_values(D)
        h_cand = (D @ W.T).max(axis=1)
        dir_margin = r_value * h_cand - h_body
        direction_failures = int(np.count_nonzero(dir_margin < -tol))
        direction_min = float(dir_margin.min())

    outer_pass = vertex_failures.size == 0 and direction_failures == 0
    return SandwichReport(
        r_value=r_value,
        r_gt_one=r_value > 1.0,
        inner_failures=inner_failures,
        inner_pass=bool(inner_pass),
        vertex_domination_failures=vertex_failures,
        vertex_domination_min_margin=float(vertex_margin.min()) if m else math.inf,
        direction_failures=direction_failures,
        direction_min_margin=direction_min,
        n_directions=int(n_directions),
        outer_pass=bool(outer_pass),
        passed=bool(inner_pass and outer_pass),
    )


# ---------------------------------------------------------------------------
# Derived constants.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HardnessConstants:
    """The scale-dependent constants behind the covering argument."""

    n: int
    m: int
    kappa: float
    delta: float
    threshold: float
    per_vertex_bound: float
    implied_lower_bound: float
    r_factor: float
    coefficient_bound: float

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "kappa": self.kappa,
            "delta": self.delta,
            "threshold": self.threshold,
            "per_vertex_bound": self.per_vertex_bound,
            "implied_lower_bound": self.implied_lower_bound,
            "r_factor": self.r_factor,
            "coefficient_bound": self.coefficient_bound,
        }


def hardness_constants(n: int, m: int, kappa: float,
                       c_config: float | None = None,
                       delta: float | None = None) -> HardnessConstants:
    """Threshold, per-vertex coverage cap, implied vertex-count lower
    bound, approximation scale R = n/(96 delta^2 max(kappa,1)) and the
    per-index coefficient bound 9 delta^2/(4n).

    Exactly one of c_config and delta fixes the scale; with c_config the
    scale is delta = c_config*sqrt(log m).
    """
    if (c_config is None) == (delta is None):
        raise InvalidConfig("give exactly one of c_config and delta")
    if n < 1 or m < 1:
        raise InvalidConfig(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    kappa = float(kappa)
    if kappa <= 0.0:
        raise InvalidConfig(f"kappa must be positive, got {kappa}")
    if delta is None:
        if m < 2:
            raise InvalidConfig("c_config scaling needs m >= 2")
        delta = float(c_config) * math.sqrt(math.log(m))
    delta = float(delta)
    if delta <= 0.0:
        raise InvalidConfig(f"delta must be positive, got {delta}")
    kmax = max(kappa, 1.0)
    delta2 = delta * delta
    return HardnessConstants(
        n=int(n),
        m=int(m),
        kappa=kappa,
        delta=delta,
        threshold=12.0 * kmax,
        per_vertex_bound=4.0 * n / (9.0 * delta2),
        implied_lower_bound=9.0 * delta2 * m / (4.0 * n),
        r_factor=n / (96.0 * delta2 * kmax),
        coefficient_bound=9.0 * delta2 / (4.0 * n),
    )
