"""Center localization against closed-form bodies.

Ground truths used below: a ball centered at the origin has barycenter
height 0 and half-volume fraction 1/2 at any central cut; the triangle
with apex (2,0) and base x = -1 has its barycenter at the origin and the
apex-side piece of the central cut holds (2/3)^2 = 4/9 of the area; the
right triangle {x >= -1, y >= -1, x + y <= 2} has barycenter (1/3, 1/3);
cone volumes have an elementary antiderivative, so quadrature must match
the closed form to solver precision; the polar of a ball centered at
a*e0 has barycenter height of sign -a, so the Santalo root-find on a
shifted-ball family must localize the shift.

MC assertions use fixed seeds with 4-stderrs tolerances; each target was
computed once beforehand to confirm it lands well inside the band.
"""

import math

import numpy as np
import pytest

from hardbody.bodies import (
    HardBodyParams,
    ball_oracle,
    build_k_eta_kappa,
    from_halfspaces,
)
from hardbody.centers import (
    GAMMA_G_THRESHOLD,
    CenterEstimate,
    CenterMethod,
    ConeVolumeKind,
    _batch_means_stderr,
    cone_volume_closed_form,
    cone_volume_quadrature,
    estimate_barycenter,
    estimate_santalo,
    gamma_g_check,
    grunbaum_check,
)
from hardbody.errors import EtaZero, InvalidConfig, RootNotBracketed
from hardbody.sampling import ChainConfig, Estimate

CHAIN8 = ChainConfig(burn_in=200, thinning=3, n_chains=8)


def _unit_estimate(value: float, stderr: float = 0.0) -> Estimate:
    return Estimate(value=value, stderr=stderr, n_samples=100, stream_id=(0, "x"))


# ---------------------------------------------------------------------------
# records and the batch-means helper
# ---------------------------------------------------------------------------


def test_gamma_g_threshold_constant():
    assert GAMMA_G_THRESHOLD == pytest.approx(-10.0 * (math.log(2.0) + 1.0),
                                              rel=1e-15)


def test_center_estimate_requires_containing_interval():
    with pytest.raises(InvalidConfig):
        CenterEstimate(eta=0.5, confidence_interval=(0.6, 0.9),
                       method=CenterMethod.SAMPLE_MEAN, n_samples=10)
    ok = CenterEstimate(eta=0.5, confidence_interval=(0.4, 0.9),
                        method=CenterMethod.SAMPLE_MEAN, n_samples=10)
    assert ok.symmetry_diagnostic == 0.0


def test_batch_means_stderr_iid_matches_naive():
    x = np.random.default_rng(42).standard_normal(4096)
    naive = x.std(ddof=1) / 64.0
    assert 0.6 * naive < _batch_means_stderr(x) < 1.6 * naive


def test_batch_means_stderr_sees_autocorrelation():
    rng = np.random.default_rng(42)
    rng.standard_normal(4096)            # skip the block used by the iid test
    e = rng.standard_normal(4096)
    ar = np.empty(4096)
    ar[0] = e[0]
    for i in range(1, 4096):
        ar[i] = 0.95 * ar[i - 1] + e[i]
    naive = ar.std(ddof=1) / 64.0
    # the true stderr of the mean is ~6x naive here; batch means must see it
    assert _batch_means_stderr(ar) > 3.0 * naive


def test_batch_means_stderr_degenerate_sizes():
    x3 = np.array([1.0, 2.0, 4.0])
    assert _batch_means_stderr(x3) == pytest.approx(x3.std(ddof=1) / math.sqrt(3))
    assert _batch_means_stderr(np.array([5.0])) == 0.0
    assert _batch_means_stderr(np.full(100, 3.0)) == 0.0


# ---------------------------------------------------------------------------
# barycenter estimates
# ---------------------------------------------------------------------------


def test_barycenter_ball_centers_at_zero():
    est = estimate_barycenter(ball_oracle(3), CHAIN8, 4000, seed=5)
    assert est.method is CenterMethod.SAMPLE_MEAN
    assert est.n_samples == 4000
    lo, hi = est.confidence_interval
    assert lo <= 0.0 <= hi
    assert est.symmetry_diagnostic < 0.05


def test_barycenter_ball_deterministic():
    a = estimate_barycenter(ball_oracle(3), CHAIN8, 4000, seed=5)
    b = estimate_barycenter(ball_oracle(3), CHAIN8, 4000, seed=5)
    assert a == b


def test_barycenter_right_triangle():
    # {x >= -1, y >= -1, x + y <= 2}: barycenter (1/3, 1/3)
    tri = from_halfspaces([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]],
                          [1.0, 1.0, 2.0])
    est = estimate_barycenter(tri, CHAIN8, 4000, seed=9)
    se = (est.confidence_interval[1] - est.eta) / 3.0
    assert est.eta == pytest.approx(1.0 / 3.0, abs=4.0 * se)
    # the body is not reflection symmetric: the diagnostic is the true
    # base-mean norm, here |mean y| = 1/3
    assert est.symmetry_diagnostic == pytest.approx(1.0 / 3.0, abs=4.0 * se)


# ---------------------------------------------------------------------------
# half-volume fractions at a cut
# ---------------------------------------------------------------------------


def test_grunbaum_ball_central_cut():
    est = grunbaum_check(ball_oracle(2), [1.0, 0.0], 0.0, 3000, seed=2)
    assert est.value <= 0.5
    assert est.value == pytest.approx(0.5, abs=4.0 * est.stderr + 1e-12)
    assert est.stream_id == (2, "grunbaum")


def test_grunbaum_triangle_barycenter_cut_is_four_ninths():
    # apex (2,0), base x = -1, barycenter at the origin; the apex piece
    # is the similar triangle scaled by 2/3, so its fraction is 4/9
    tri = from_halfspaces([[-1.0, 0.0], [1.0, 2.0], [1.0, -2.0]],
                          [1.0, 2.0, 2.0])
    est = grunbaum_check(tri, [1.0, 0.0], 0.0, 3000, seed=2)
    assert est.value == pytest.approx(4.0 / 9.0, abs=4.0 * est.stderr)
    assert est.value >= 1.0 / math.e - 3.0 * est.stderr


def test_grunbaum_axis_scale_invariance():
    tri = from_halfspaces([[-1.0, 0.0], [1.0, 2.0], [1.0, -2.0]],
                          [1.0, 2.0, 2.0])
    a = grunbaum_check(tri, [1.0, 0.0], 0.0, 500, seed=2)
    b = grunbaum_check(tri, [2.0, 0.0], 0.0, 500, seed=2)
    assert a.value == b.value


def test_grunbaum_rejects_zero_axis():
    with pytest.raises(InvalidConfig):
        grunbaum_check(ball_oracle(2), [0.0, 0.0], 0.0, 10, seed=0)


# ---------------------------------------------------------------------------
# cone volumes: closed form vs quadrature
# ---------------------------------------------------------------------------


def test_cone_volume_below_zero_factor():
    base = _unit_estimate(2.0, stderr=0.1)
    out = cone_volume_closed_form(ConeVolumeKind.C_MINUS_BELOW_ZERO, 0.5, base, 3)
    # factor 1/(eta (n+1)) = 1/2 scales value and stderr alike
    assert out.value == pytest.approx(1.0)
    assert out.stderr == pytest.approx(0.05)
    assert out.n_samples == base.n_samples
    assert out.stream_id == base.stream_id


def test_cone_volume_prime_worked_value():
    out = cone_volume_closed_form(ConeVolumeKind.C_MINUS_PRIME, 0.5,
                                  _unit_estimate(2.0), 1)
    # (1 + 0.49)^2 / (0.5 * 2) * 2 = 2 * 1.49^2
    assert out.value == pytest.approx(4.4402, rel=1e-12)


@pytest.mark.parametrize("eta", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("n", [1, 4, 9])
@pytest.mark.parametrize("kind", list(ConeVolumeKind))
def test_cone_volume_quadrature_matches_closed_form(eta, n, kind):
    closed = cone_volume_closed_form(kind, eta, _unit_estimate(1.0), n).value
    quadrature = cone_volume_quadrature(kind, eta, 1.0, n)
    assert quadrature == pytest.approx(closed, rel=1e-10)


def test_cone_volume_quadrature_hand_case():
    # integral of (1 + h/2) over [-2, 0] is exactly 1
    val = cone_volume_quadrature(ConeVolumeKind.C_MINUS_BELOW_ZERO, 0.5, 3.0, 1)
    assert val == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("fn", [
    lambda kind, eta, n: cone_volume_closed_form(kind, eta, _unit_estimate(1.0), n),
    lambda kind, eta, n: cone_volume_quadrature(kind, eta, 1.0, n),
])
def test_cone_volume_validation(fn):
    with pytest.raises(InvalidConfig):
        fn(ConeVolumeKind.C_MINUS_PRIME, 0.5, 0)
    with pytest.raises(EtaZero):
        fn(ConeVolumeKind.C_MINUS_PRIME, 0.0, 3)


def test_cone_volume_unknown_kind():
    with pytest.raises(InvalidConfig):
        cone_volume_closed_form("bogus", 0.5, _unit_estimate(1.0), 3)


# ---------------------------------------------------------------------------
# Santalo root-find and the polar-barycenter check
# ---------------------------------------------------------------------------

SANT_CHAIN = ChainConfig(burn_in=64, thinning=2, n_chains=8)


def test_estimate_santalo_localizes_shifted_ball():
    # family(h) = B((0.6 - h) e0, 3): the polar barycenter changes sign
    # at h = 0.6, the Santalo point of the family
    def family(h):
        return ball_oracle(2, radius=3.0, center=[0.6 - h, 0.0])

    est = estimate_santalo(family, (-1.0, 3.0), seed=7, n_samples=512,
                           chain=SANT_CHAIN)
    assert est.method is CenterMethod.POLAR_ROOT_FIND
    lo, hi = est.confidence_interval
    assert -1.0 <= lo < hi <= 3.0
    assert hi - lo <= 1.0                   # narrowed from the width-4 bracket
    assert est.eta == pytest.approx(0.6, abs=0.25)
    assert est.n_samples % 512 == 0
    assert est.n_samples >= 3 * 512


def test_estimate_santalo_unbracketed_root_raises():
    # centers 2 - h/4 stay positive on (0,1) and on the widened bracket,
    # so the polar barycenter never changes sign
    def family(h):
        return ball_oracle(2, radius=4.0, center=[2.0 - h / 4.0, 0.0])

    with pytest.raises(RootNotBracketed):
        estimate_santalo(family, (0.0, 1.0), seed=7, n_samples=512,
                         chain=SANT_CHAIN)


def test_estimate_santalo_rejects_empty_bracket():
    with pytest.raises(InvalidConfig):
        estimate_santalo(lambda h: ball_oracle(2), (1.0, 1.0), seed=0)


def test_gamma_g_check_matches_manual_reconstruction(desk4):
    chain = ChainConfig(burn_in=200, thinning=2, n_chains=8)
    est = gamma_g_check(desk4, 0.3, seed=11, n_samples=512, chain=chain)
    assert est.stream_id == (11, "gamma_g")
    assert est.n_samples == 512
    assert est.stderr > 0.0
    # desk-scale bodies sit far above the asymptotic localization floor
    assert est.value > GAMMA_G_THRESHOLD + 10.0

    body = build_k_eta_kappa(HardBodyParams(system=desk4, eta=0.3, kappa=1.0))
    manual = estimate_barycenter(body.polar(), chain, 512, seed=11,
                                 label="gamma_g")
    assert manual.eta == est.value
    assert (manual.confidence_interval[1] - manual.eta) / 3.0 == est.stderr


@pytest.mark.parametrize("eta_g", [0.0, 1.0, -0.2])
def test_gamma_g_check_rejects_bad_eta(desk4, eta_g):
    with pytest.raises(InvalidConfig):
        gamma_g_check(desk4, eta_g, seed=0, n_samples=8)
