"""Center localization on the symmetry axis: barycenter and Santalo-point
estimates, closed-form cone volumes with an independent quadrature
cross-check, and Grünbaum half-volume diagnostics.

The lifted bodies are reflection symmetric in the base coordinates, so both
centers lie on the e0-axis and every search here is one-dimensional. All
estimates are Monte-Carlo with explicit confidence intervals; the asymptotic
localization inequalities are checked softly (WARN margins), never as hard
failures at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .bodies import BodyOracle, build_k_eta_kappa, HardBodyParams
from .errors import EtaZero, InvalidConfig, RootNotBracketed
from .sampling import ChainConfig, Estimate, hit_and_run

# the axis-coordinate floor for the polar barycenter: -10*log(2e)
GAMMA_G_THRESHOLD = -10.0 * math.log(2.0 * math.e)


class CenterMethod(Enum):
    SAMPLE_MEAN = "sample_mean"
    GRUNBAUM_BISECTION = "grunbaum_bisection"
    POLAR_ROOT_FIND = "polar_root_find"


class ConeVolumeKind(Enum):
    C_MINUS_BELOW_ZERO = "cminus_below_zero"
    C_MINUS_PRIME = "cminus_prime"


@dataclass
class CenterEstimate:
    """An axis-height estimate with its confidence interval."""

    eta: float
    confidence_interval: tuple[float, float]
    method: CenterMethod
    n_samples: int
    symmetry_diagnostic: float = 0.0    # norm of the mean base component

    def __post_init__(self) -> None:
        lo, hi = self.confidence_interval
        if not lo <= self.eta <= hi:
            raise InvalidConfig("confidence interval must contain the estimate")


def _batch_means_stderr(x: np.ndarray, n_batches: int = 32) -> float:
    """Batch-means standard error; robust to leftover chain autocorrelation."""
    N = x.size
    b = max(min(n_batches, N // 2), 1)
    per = N // b
    if per < 1 or b < 2:
        return float(np.std(x, ddof=1) / math.sqrt(max(N, 2))) if N > 1 else 0.0
    means = x[:b * per].reshape(b, per).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(b))


def estimate_barycenter(oracle: BodyOracle, chain: Optional[ChainConfig],
                        n_samples: int, seed: int,
                        label: str = "barycenter") -> CenterEstimate:
    """Mean height of hit-and-run samples with a batch-means CI.

    The mean base component is reported as a symmetry diagnostic; for the
    reflection-symmetric lifted bodies it should vanish within noise.
    """
    pts = hit_and_run(oracle, chain, n_samples, seed, label=label)
    heights = pts[:, 0]
    eta = float(heights.mean())
    se = _batch_means_stderr(heights)
    diag = float(np.linalg.norm(pts[:, 1:].mean(axis=0))) if pts.shape[1] > 1 else 0.0
    return CenterEstimate(eta=eta,
                          confidence_interval=(eta - 3.0 * se, eta + 3.0 * se),
                          method=CenterMethod.SAMPLE_MEAN,
                          n_samples=n_samples,
                          symmetry_diagnostic=diag)


def grunbaum_check(oracle: BodyOracle, axis: np.ndarray, cut: float,
                   n_samples: int, seed: int) -> Estimate:
    """min of the two empirical half-volume fractions at the cut plane."""
    axis = np.asarray(axis, dtype=np.float64).ravel()
    na = np.linalg.norm(axis)
    if na <= 0:
        raise InvalidConfig("axis must be nonzero")
    axis = axis / na
    pts = hit_and_run(oracle, None, n_samples, seed, label="grunbaum")
    above = float(np.mean(pts @ axis >= cut))
    p = min(above, 1.0 - above)
    return Estimate(value=p, stderr=math.sqrt(max(above * (1 - above), 0.0)
                                              / n_samples),
                    n_samples=n_samples, stream_id=(seed, "grunbaum"))


# ---------------------------------------------------------------------------
# Cone volumes: closed form and quadrature oracle.
# ---------------------------------------------------------------------------

def cone_volume_closed_form(kind: ConeVolumeKind, eta: float,
                            base_volume: Estimate, n: int) -> Estimate:
    """|C- ∩ {y0<=0}| = |Q1|/(eta(n+1));
    |C-'| = (1+0.98 eta)^{n+1}/(eta(n+1)) * |Qt°|.

    The base volume's stderr propagates through the linear factor.
    """
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    if eta <= 0.0:
        raise EtaZero("cone volume diverges as eta -> 0 (cylinder limit)")
    if kind is ConeVolumeKind.C_MINUS_BELOW_ZERO:
        factor = 1.0 / (eta * (n + 1))
    elif kind is ConeVolumeKind.C_MINUS_PRIME:
        factor = (1.0 + 0.98 * eta) ** (n + 1) / (eta * (n + 1))
    else:
        raise InvalidConfig(f"unknown cone volume kind {kind!r}")
    return Estimate(value=factor * base_volume.value,
                    stderr=factor * base_volume.stderr,
                    n_samples=base_volume.n_samples,
                    stream_id=base_volume.stream_id)


def cone_volume_quadrature(kind: ConeVolumeKind, eta: float,
                           base_volume: float, n: int) -> float:
    """Independent check: integrate the height-scaled cross-section volumes.

    The section of the cone at height h is (1+eta*h) times the base set, so
    its n-volume is (1+eta*h)^n * base_volume; integrate h over the cone's
    height range numerically.
    """
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    if eta <= 0.0:
        raise EtaZero("cone volume diverges as eta -> 0")
    hi = 0.0 if kind is ConeVolumeKind.C_MINUS_BELOW_ZERO else 0.98
    val, _ = quad(lambda h: (1.0 + eta * h) ** n, -1.0 / eta, hi, limit=200)
    return val * base_volume


# ---------------------------------------------------------------------------
# Santalo point and the polar barycenter bound.
# ---------------------------------------------------------------------------

def estimate_santalo(family: Callable[[float], BodyOracle],
                     bracket: tuple[float, float], seed: int,
                     n_samples: int = 2048,
                     chain: Optional[ChainConfig] = None,
                     width_floor: Optional[float] = None) -> CenterEstimate:
    """Root-find the shift h where the polar of (body - h*e0) is centered.

    The Santalo point sits at the h where the e0-barycenter of the polar
    crosses zero. Bisection on MC sign estimates; stops when the CI at the
    midpoint straddles zero or the bracket is narrower than the floor
    (default 1/dim^2). Widens the bracket once if the endpoint signs match.
    """

    def gamma(h: float) -> CenterEstimate:
        body = family(h)
        return estimate_barycenter(body.polar(), chain, n_samples, seed,
                                   label="santalo")

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise InvalidConfig("bracket must satisfy lo < hi")
    g_lo, g_hi = gamma(lo), gamma(hi)
    if g_lo.eta * g_hi.eta > 0.0:
        mid, half = 0.5 * (lo + hi), hi - lo
        lo, hi = mid - half, mid + half
        g_lo, g_hi = gamma(lo), gamma(hi)
        if g_lo.eta * g_hi.eta > 0.0:
            raise RootNotBracketed(
                f"polar barycenter sign is {np.sign(g_lo.eta)} at both endpoints")
    dim = family(0.5 * (lo + hi)).dimension
    floor = width_floor if width_floor is not None else 1.0 / (dim * dim)
    total = g_lo.n_samples + g_hi.n_samples
    sign_lo = math.copysign(1.0, g_lo.eta)
    while hi - lo > floor:
        mid = 0.5 * (lo + hi)
        g = gamma(mid)
        total += g.n_samples
        ci_lo, ci_hi = g.confidence_interval
        if ci_lo <= 0.0 <= ci_hi:
            break                       # noise-limited: the root is here
        if math.copysign(1.0, g.eta) == sign_lo:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return CenterEstimate(eta=mid, confidence_interval=(lo, hi),
                          method=CenterMethod.POLAR_ROOT_FIND,
                          n_samples=total)


def gamma_g_check(system, eta_g: float, seed: int, n_samples: int = 2048,
                  chain: Optional[ChainConfig] = None) -> Estimate:
    """Axis-height of the barycenter of K(eta_g)°, vs GAMMA_G_THRESHOLD."""
    if not 0.0 < eta_g < 1.0:
        raise InvalidConfig(f"eta_g must be in (0,1), got {eta_g}")
    body = build_k_eta_kappa(HardBodyParams(system=system, eta=eta_g, kappa=1.0))
    est = estimate_barycenter(body.polar(), chain, n_samples, seed,
                              label="gamma_g")
    se = (est.confidence_interval[1] - est.eta) / 3.0
    return Estimate(value=est.eta, stderr=se, n_samples=n_samples,
                    stream_id=(seed, "gamma_g"))
