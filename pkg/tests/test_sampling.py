"""Monte-Carlo estimators: closed-form targets, exact stream identities,
and walk distribution checks.

Statistical assertions run on fixed seeds, so they are deterministic; each
target was checked to land within the stated multiple of its own standard
error before being frozen here. Exact-equality assertions (the x2 scalings,
the collinear-support urysohn cases) rely on doubling being exact in
floating point and on common random numbers, not on luck.
"""

import json
import math

import numpy as np
import pytest

from hardbody.bodies import (
    BodyDescriptor,
    BodyOracle,
    ball_oracle,
    box_oracle,
    build_q,
    codes_from_margin,
    cone_oracle,
    cross_section,
    scale_oracle,
)
from hardbody.errors import (
    ChordDegenerate,
    InvalidConfig,
    StartNotInterior,
)
from hardbody.sampling import (
    ChainConfig,
    Estimate,
    _chord_via_gauge,
    _chord_via_membership,
    ball_block,
    ball_volume,
    effective_sample_size,
    hit_and_run,
    mean_width,
    reference_volume,
    sphere_block,
    urysohn_bound,
    volume_mc,
    volume_ratio_qt_polar,
)

I2 = np.eye(2)


# ---------------------------------------------------------------------------
# records and reference samplers
# ---------------------------------------------------------------------------


def test_estimate_validation_and_json():
    est = Estimate(value=1.5, stderr=0.1, n_samples=100, stream_id=(7, "x"))
    blob = json.loads(est.to_json())
    assert blob == {"value": 1.5, "stderr": 0.1, "n_samples": 100,
                    "seed": 7, "label": "x"}
    with pytest.raises(InvalidConfig):
        Estimate(value=0.0, stderr=-1.0, n_samples=10, stream_id=(0, "y"))
    with pytest.raises(InvalidConfig):
        Estimate(value=0.0, stderr=0.0, n_samples=0, stream_id=(0, "y"))


def test_chain_config_resolution():
    burn, thin = ChainConfig().resolve(8)
    assert (burn, thin) == (640, 8)
    burn, thin = ChainConfig(burn_in=5, thinning=3).resolve(8)
    assert (burn, thin) == (5, 3)
    with pytest.raises(InvalidConfig):
        ChainConfig(burn_in=0)
    with pytest.raises(InvalidConfig):
        ChainConfig(n_chains=0)


def test_sphere_and_ball_blocks():
    S = sphere_block(0, "s", 0, 500, 4, radius=2.0)
    np.testing.assert_allclose(np.linalg.norm(S, axis=1), 2.0, rtol=1e-12)
    P = ball_block(0, "b", 0, 4096, 3)
    r = np.linalg.norm(P, axis=1)
    assert np.all(r <= 1.0)
    # radial CDF: r^dim should be uniform on [0,1]
    u = r ** 3
    assert abs(u.mean() - 0.5) < 4.0 * (1.0 / math.sqrt(12.0 * 4096))
    # determinism by block label
    np.testing.assert_array_equal(P, ball_block(0, "b", 0, 4096, 3))


def test_ball_volume_known_values():
    assert ball_volume(1, 3.0) == pytest.approx(6.0)
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3, 2.0) == pytest.approx(4.0 / 3.0 * math.pi * 8.0)


def test_reference_volume_dispatch():
    assert reference_volume(ball_oracle(2, radius=2.0)) == pytest.approx(4 * math.pi)
    assert reference_volume(box_oracle([0.0, -1.0], [2.0, 1.0])) == pytest.approx(4.0)
    assert reference_volume(build_q(I2)) is None


# ---------------------------------------------------------------------------
# width and volume estimators
# ---------------------------------------------------------------------------


def test_mean_width_of_ball_matches_gaussian_norm():
    want = math.sqrt(2.0) * math.gamma(2.0) / math.gamma(1.5)   # E||G_3||
    est = mean_width(ball_oracle(3), 8192, seed=5)
    assert abs(est.value - want) <= 4.0 * est.stderr
    assert est.n_samples == 8192 and est.stream_id == (5, "mean_width")


def test_mean_width_common_random_numbers_scale_exactly():
    # same stream, supports doubled: sums double bit-for-bit
    e1 = mean_width(ball_oracle(3), 4096, seed=7)
    e2 = mean_width(scale_oracle(ball_oracle(3), 2.0), 4096, seed=7)
    assert e2.value == 2.0 * e1.value
    assert e2.stderr == 2.0 * e1.stderr


def test_mean_width_flags_upper_bound_supports():
    capped = cross_section(1.25 * I2, 0.5)      # caps nonempty
    assert mean_width(capped, 64, seed=0).support_upper_bound
    assert not mean_width(ball_oracle(2), 64, seed=0).support_upper_bound


def test_urysohn_bound_balls_are_exact():
    # supports collinear with ||G||: the delta-method variance cancels to 0
    u1 = urysohn_bound(ball_oracle(4), 4096, seed=3)
    assert (u1.value, u1.stderr) == (1.0, 0.0)
    u2 = urysohn_bound(scale_oracle(ball_oracle(3), 2.0), 4096, seed=3)
    assert (u2.value, u2.stderr) == (8.0, 0.0)


def test_volume_mc_disk_and_cross_polytope():
    box = box_oracle([-1.0, -1.0], [1.0, 1.0])
    v = volume_mc(ball_oracle(2), box, 40_000, seed=11)
    assert abs(v.value - math.pi) <= 4.0 * v.stderr
    vq = volume_mc(build_q(I2), box, 40_000, seed=11)
    assert abs(vq.value - 2.0) <= 4.0 * vq.stderr


def test_volume_mc_self_reference_is_exact():
    v = volume_mc(ball_oracle(2), ball_oracle(2), 1000, seed=2)
    assert v.value == math.pi and v.stderr == 0.0


def test_volume_mc_validation():
    with pytest.raises(InvalidConfig):
        volume_mc(ball_oracle(2), ball_oracle(3), 100, seed=0)
    with pytest.raises(InvalidConfig):
        volume_mc(ball_oracle(2), build_q(I2), 100, seed=0)   # unknown volume


def test_volume_ratio_qt_polar():
    # t >= 1 with the identity system: the box contains the disk exactly
    r1 = volume_ratio_qt_polar(I2, 1.0, 5000, seed=4)
    assert (r1.value, r1.stderr) == (1.0, 0.0)
    # t = 0.1: square of side 0.2 inside the unit disk
    r2 = volume_ratio_qt_polar(I2, 0.1, 60_000, seed=4)
    want = 0.04 / math.pi
    assert abs(r2.value - want) <= 4.0 * r2.stderr
    # no constraints at all
    assert volume_ratio_qt_polar(np.zeros((0, 2)), 0.5, 100, seed=4).value == 1.0
    with pytest.raises(InvalidConfig):
        volume_ratio_qt_polar(I2, 0.0, 100, seed=0)


# ---------------------------------------------------------------------------
# hit-and-run
# ---------------------------------------------------------------------------


def test_hit_and_run_disk_moments():
    pts = hit_and_run(ball_oracle(2), None, 10_000, seed=0)
    assert pts.shape == (10_000, 2)
    assert np.all(np.linalg.norm(pts, axis=1) <= 1.0)
    assert np.linalg.norm(pts.mean(axis=0)) <= 0.05
    second = (pts ** 2).mean(axis=0)
    np.testing.assert_allclose(second, 0.25, atol=0.02)


def test_hit_and_run_segment_uniform():
    seg = hit_and_run(box_oracle([-1.0], [1.0]), None, 10_000, seed=1).ravel()
    hist, _ = np.histogram(seg, bins=10, range=(-1.0, 1.0))
    chi2 = float(((hist - 1000.0) ** 2 / 1000.0).sum())
    assert chi2 < 16.92     # 95% quantile, 9 degrees of freedom


def test_hit_and_run_membership_only_oracle():
    # cross-sections expose neither chord nor gauge: bisection fallback
    sec = cross_section(I2, 0.3)
    assert sec.chord_fn is None and sec.gauge_fn is None
    pts = hit_and_run(sec, ChainConfig(burn_in=50, thinning=2), 128, seed=3)
    assert np.all(sec.membership_codes(pts, 1e-9) <= 0)
    rerun = hit_and_run(sec, ChainConfig(burn_in=50, thinning=2), 128, seed=3)
    np.testing.assert_array_equal(pts, rerun)


def test_hit_and_run_errors():
    with pytest.raises(StartNotInterior):
        hit_and_run(ball_oracle(2), ChainConfig(start=np.array([1.0, 0.0])),
                    10, seed=0)
    with pytest.raises(InvalidConfig):
        hit_and_run(ball_oracle(2), None, 0, seed=0)
    stub = BodyOracle(
        dimension=2,
        descriptor=BodyDescriptor("Custom"),
        membership_codes_fn=ball_oracle(2).membership_codes_fn,
        chord_fn=lambda O, D, tol: (np.zeros(O.shape[0]), np.zeros(O.shape[0])),
    )
    with pytest.raises(ChordDegenerate):
        hit_and_run(stub, ChainConfig(burn_in=1, thinning=1, n_chains=1), 2, seed=0)


def test_chord_fallbacks_reject_unbounded_bodies():
    cone = cone_oracle("cplus", I2, 0.25)
    with pytest.raises(InvalidConfig):
        _chord_via_gauge(cone, np.zeros((1, 3)), np.array([[-1.0, 0.0, 0.0]]))
    bare = BodyOracle(
        dimension=2,
        descriptor=BodyDescriptor("Custom"),
        membership_codes_fn=lambda Y, tol: codes_from_margin(Y[:, 0] - 1.0, tol),
    )
    with pytest.raises(InvalidConfig):
        _chord_via_membership(bare, np.zeros((1, 2)), np.array([[1.0, 0.0]]))


def test_chord_via_gauge_matches_exact_ball():
    ball = ball_oracle(2, radius=1.5)
    O = np.array([[0.2, -0.1], [0.0, 0.5]])
    D = np.array([[1.0, 0.0], [0.6, 0.8]])
    lo_g, hi_g = _chord_via_gauge(ball, O, D)
    lo_e, hi_e = ball.chord_fn(O, D, 1e-9)
    np.testing.assert_allclose(lo_g, lo_e, atol=1e-7)
    np.testing.assert_allclose(hi_g, hi_e, atol=1e-7)


def test_chord_via_membership_matches_exact_ball():
    ball = ball_oracle(2, radius=1.5)
    bare = BodyOracle(
        dimension=2,
        descriptor=BodyDescriptor("Custom"),
        membership_codes_fn=ball.membership_codes_fn,
        outer_radius=1.5,
    )
    O = np.array([[0.2, -0.1]])
    D = np.array([[0.6, 0.8]])
    lo_m, hi_m = _chord_via_membership(bare, O, D, tol=1e-9)
    lo_e, hi_e = ball.chord_fn(O, D, 1e-9)
    np.testing.assert_allclose(lo_m, lo_e, atol=1e-6)
    np.testing.assert_allclose(hi_m, hi_e, atol=1e-6)


# ---------------------------------------------------------------------------
# effective sample size
# ---------------------------------------------------------------------------


def test_effective_sample_size_regimes():
    rng = np.random.default_rng(0)
    iid = rng.standard_normal(1000)
    assert effective_sample_size(iid) > 400.0
    ar = np.empty(1000)
    ar[0] = 0.0
    eps = rng.standard_normal(1000)
    for i in range(1, 1000):
        ar[i] = 0.95 * ar[i - 1] + eps[i]
    assert effective_sample_size(ar) < 100.0
    assert effective_sample_size(np.ones(50)) == 50.0
    assert effective_sample_size(np.array([1.0, 2.0, 3.0])) == 3.0
    # multi-column: the worst coordinate governs
    both = np.column_stack([iid, ar])
    assert effective_sample_size(both) < 100.0
