"""Quasi-orthogonal Gaussian vector systems: generation, verification, tails.

A system is m vectors x_i = X_i / delta with X_i iid standard Gaussian in
R^n and delta = c_config * sqrt(log m). A verified system satisfies the two
defining inequalities

    (1/2) sqrt(n)/delta <= ||x_i|| <= 2 sqrt(n)/delta,
    |<x_i, x_j>| <= sqrt(n)/delta          (i != j),

checked with plain comparisons and no epsilon: the inequalities have slack
by construction, so borderline systems should fail loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import blas

from . import streams
from .errors import InvalidConfig, NonUnitDirection
from .sampling import Estimate

# Conservative scaling constant used by reference mode. Desk mode shrinks it
# so that finite-size experiments have non-degenerate geometry.
REFERENCE_C_CONFIG = 100.0
DESK_C_CONFIG = 3.0


class Mode(Enum):
    """Constant regime for a design."""

    REFERENCE = "reference"  # full-size constants, m-range enforced
    DESK = "desk"            # small constants, m-range reported only


@dataclass
class DesignConfig:
    """Parameters of a quasi-orthogonal system draw."""

    n: int
    m: int
    seed: int
    c_config: float | None = None
    mode: Mode = Mode.DESK

    def __post_init__(self) -> None:
        if self.c_config is None:
            self.c_config = DESK_C_CONFIG if self.mode is Mode.DESK else REFERENCE_C_CONFIG
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidConfig(f"n must be >= 1, got {self.n}")
        if self.m <= 1:
            # m = 1 leaves log m = 0 (delta undefined) and no pair condition.
            raise InvalidConfig(f"m must be >= 2, got {self.m}")
        if not self.c_config > 0:
            raise InvalidConfig(f"c_config must be positive, got {self.c_config}")
        if self.mode is Mode.REFERENCE and not m_range_ok(self.n, self.m, self.c_config):
            lo, hi = m_range(self.n, self.m, self.c_config)
            raise InvalidConfig(
                f"reference mode requires {lo:.6g} <= m <= {hi:.6g}, got m={self.m}")

    @property
    def delta(self) -> float:
        return self.c_config * math.sqrt(math.log(self.m))


def m_range(n: int, m: int, c_config: float) -> tuple[float, float]:
    """Admissible [c*n, exp(n/c)] range for m in reference mode."""
    return c_config * n, math.exp(n / c_config)


def m_range_ok(n: int, m: int, c_config: float) -> bool:
    lo, hi = m_range(n, m, c_config)
    return lo <= m <= hi


@dataclass
class QuasiOrthogonalSystem:
    """The vectors x_1..x_m together with their scale delta."""

    vectors: np.ndarray  # (m, n) float64
    delta: float
    n: int
    m: int
    _hull: object = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.vectors.shape != (self.m, self.n):
            raise InvalidConfig(
                f"vectors shape {self.vectors.shape} != (m, n) = ({self.m}, {self.n})")

    def hull_data(self):
        """Cached solver-side precomputations for conv{+-x_i}."""
        if self._hull is None:
            from .solver import HullData

            self._hull = HullData(self.vectors)
        return self._hull

    @property
    def norm_bounds(self) -> tuple[float, float]:
        root = math.sqrt(self.n) / self.delta
        return 0.5 * root, 2.0 * root

    @property
    def ip_bound(self) -> float:
        return math.sqrt(self.n) / self.delta


@dataclass
class DesignReport:
    """Outcome of the exact verification of the two defining inequalities."""

    norm_violations: list[int]
    inner_product_violations: list[tuple[int, int, float]]
    passed: bool
    # (min ||x_i|| * delta/sqrt(n), max ||x_i|| * delta/sqrt(n),
    #  max_{i != j} |<x_i, x_j>| * delta/sqrt(n))
    extremal_values: tuple[float, float, float]


def generate_design(config: DesignConfig) -> QuasiOrthogonalSystem:
    """Draw the system deterministically from (config.seed, block labels).

    Vectors are generated in fixed blocks with per-block counter streams, so
    output is identical for any worker count and any generation order.
    """
    config.validate()
    n, m = config.n, config.m
    delta = config.delta

    def one_block(bi: int, lo: int, hi: int) -> np.ndarray:
        return streams.gaussian_block(config.seed, "design", bi, (hi - lo, n))

    blocks = streams.map_blocks(one_block, m)
    gauss = np.vstack(blocks) if blocks else np.empty((0, n))
    return QuasiOrthogonalSystem(vectors=gauss / delta, delta=delta, n=n, m=m)


def verify_design(system: QuasiOrthogonalSystem) -> DesignReport:
    """Check the defining norm and inner-product inequalities exactly.

    The pairwise maximum is located with a float32 Gram prefilter; every pair
    that lands within the prefilter's rigorous error band of the threshold is
    re-evaluated in float64, so reported comparisons are exact float64
    comparisons while the scan stays O(m^2 n) in float32.
    """
    X = system.vectors
    m, n = system.m, system.n
    lo, hi = system.norm_bounds
    ip_thr = system.ip_bound

    norms = np.linalg.norm(X, axis=1)
    norm_bad = np.where((norms < lo) | (norms > hi))[0]

    ip_viols: list[tuple[int, int, float]] = []
    if m >= 2:
        max_ip, ip_viols = _pairwise_max_and_violations(X, norms, ip_thr)
    else:
        max_ip = 0.0

    scale = system.delta / math.sqrt(n)
    extremal = (float(norms.min() * scale), float(norms.max() * scale),
                float(max_ip * scale))
    passed = len(norm_bad) == 0 and len(ip_viols) == 0
    return DesignReport(norm_violations=[int(i) for i in norm_bad],
                        inner_product_violations=ip_viols,
                        passed=passed,
                        extremal_values=extremal)


def _pairwise_max_and_violations(X: np.ndarray, norms: np.ndarray,
                                 threshold: float) -> tuple[float, list[tuple[int, int, float]]]:
    """Exact max |<x_i, x_j>| over i < j and the list of pairs above threshold."""
    m, n = X.shape
    if m <= 512:
        gram = X @ X.T
        np.fill_diagonal(gram, 0.0)
        agram = np.abs(gram)
        max_ip = float(agram.max()) if m > 1 else 0.0
        ii, jj = np.where(np.triu(agram, 1) > threshold)
        viols = [(int(i), int(j), float(gram[i, j])) for i, j in zip(ii, jj)]
        return max_ip, viols

    # float32 prefilter: |fl32(<x_i,x_j>) - <x_i,x_j>| <= gamma * ||x_i|| ||x_j||
    # with gamma = (n + 4) * 2^-24 * 4 (factor 4 is slack for the conversion
    # and accumulation order). syrk fills the upper triangle only, at half
    # the flops of a full gram; the untouched lower half is zero and drops
    # out of the scans on its own since the cut is positive.
    X32 = X.astype(np.float32)
    agram32 = blas.ssyrk(1.0, X32, lower=0)
    np.fill_diagonal(agram32, 0.0)
    np.abs(agram32, out=agram32)
    band = float((n + 4) * 2.0 ** -24 * 4.0 * (norms.max() ** 2))
    row_max = agram32.max(axis=1) if m > 1 else np.zeros(m)
    max32 = float(row_max.max()) if m > 1 else 0.0

    cut = max(max32 - band, threshold - band)
    if cut <= 0.0:
        # near-zero gram: the error band swallows the scale, so the
        # prefilter cannot exonerate anything; do the exact scan
        gram = X @ X.T
        np.fill_diagonal(gram, 0.0)
        agram = np.abs(gram)
        max_ip = float(agram.max())
        ii, jj = np.where(np.triu(agram, 1) > threshold)
        return max_ip, [(int(i), int(j), float(gram[i, j]))
                        for i, j in zip(ii, jj)]
    max_ip = 0.0
    viols: list[tuple[int, int, float]] = []
    for i in np.where(row_max >= cut)[0]:
        for j in np.where(agram32[i] >= cut)[0]:
            if i >= j:
                continue
            val = float(X[i] @ X[j])
            if abs(val) > max_ip:
                max_ip = abs(val)
            if abs(val) > threshold:
                viols.append((int(i), int(j), val))
    viols.sort()
    return max_ip, viols


def tail_probability(kind: str, directions: np.ndarray, threshold: float,
                     trials: int, seed: int) -> Estimate:
    """Empirical P(max_i |<v_i, X>| >= threshold) with binomial stderr.

    kind selects the law of X: "gaussian" (standard normal), "sphere"
    (uniform on the radius-sqrt(n) sphere), or "ball" (uniform in the
    radius-sqrt(n) ball). Directions must be unit vectors. The same seed
    reuses the same underlying max-projection samples for every threshold,
    so the estimate is non-increasing in the threshold by construction.
    """
    D = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    n = D.shape[1]
    dev = np.abs(np.linalg.norm(D, axis=1) - 1.0)
    if dev.max() > 1e-9:
        raise NonUnitDirection(f"direction norm off by {dev.max():.3e}")
    kind = kind.lower()
    if kind not in ("gaussian", "sphere", "ball"):
        raise InvalidConfig(f"unknown sample law {kind!r}")
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")

    label = f"tail/{kind}"

    def one_block(bi: int, lo: int, hi: int) -> int:
        cnt = hi - lo
        g = streams.gaussian_block(seed, label, bi, (cnt, n))
        if kind == "gaussian":
            pts = g
        else:
            radii = np.linalg.norm(g, axis=1, keepdims=True)
            radii[radii == 0.0] = 1.0
            pts = g / radii * math.sqrt(n)
            if kind == "ball":
                u = streams.uniform_block(seed, label + "/r", bi, (cnt, 1))
                pts = pts * u ** (1.0 / n)
        maxabs = np.abs(pts @ D.T).max(axis=1)
        return int(np.count_nonzero(maxabs >= threshold))

    hits = int(streams.reduce_sum(streams.map_blocks(one_block, trials)))
    p = hits / trials
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    return Estimate(value=p, stderr=stderr, n_samples=trials, stream_id=(seed, label))


# ---------------------------------------------------------------------------
# Serialization: bit-exact JSON round trip (17 significant digits).
# ---------------------------------------------------------------------------

def design_to_json(system: QuasiOrthogonalSystem, seed: int | None = None) -> str:
    """Serialize to JSON with float64 values as 17-significant-digit decimals."""
    rows = [
        "[" + ", ".join(format(v, ".17g") for v in row) + "]"
        for row in system.vectors
    ]
    body = ",\n    ".join(rows)
    seed_part = "null" if seed is None else str(int(seed))
    return (
        "{\n"
        f'  "n": {system.n},\n'
        f'  "m": {system.m},\n'
        f'  "delta": {format(system.delta, ".17g")},\n'
        f'  "seed": {seed_part},\n'
        f'  "vectors": [\n    {body}\n  ]\n'
        "}"
    )


def design_from_json(text: str) -> QuasiOrthogonalSystem:
    doc = json.loads(text)
    vectors = np.asarray(doc["vectors"], dtype=np.float64)
    if vectors.size == 0:
        vectors = vectors.reshape(int(doc["m"]), int(doc["n"]))
    return QuasiOrthogonalSystem(vectors=vectors, delta=float(doc["delta"]),
                                 n=int(doc["n"]), m=int(doc["m"]))
