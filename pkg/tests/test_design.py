"""Generation and verification of quasi-orthogonal systems.

Expected values here are either direct arithmetic on hand-built vectors or
closed-form probabilities (normal tails) checked against the estimator's own
standard error.
"""

import json
import math

import numpy as np
import pytest

from hardbody.design import (
    DESK_C_CONFIG,
    DesignConfig,
    Mode,
    design_from_json,
    design_to_json,
    generate_design,
    m_range,
    m_range_ok,
    QuasiOrthogonalSystem,
    tail_probability,
    verify_design,
)
from hardbody.errors import InvalidConfig, NonUnitDirection

# ---------------------------------------------------------------------------
# Configuration invariants.
# ---------------------------------------------------------------------------

def test_delta_formula():
    cfg = DesignConfig(n=8, m=100, seed=0, c_config=2.5)
    assert cfg.delta == 2.5 * math.sqrt(math.log(100))


def test_desk_default_c():
    cfg = DesignConfig(n=8, m=100, seed=0)
    assert cfg.c_config == DESK_C_CONFIG


def test_m_too_small_rejected():
    with pytest.raises(InvalidConfig):
        DesignConfig(n=4, m=1, seed=0)
    with pytest.raises(InvalidConfig):
        DesignConfig(n=0, m=4, seed=0)


def test_reference_mode_enforces_m_range():
    # c=2, n=10: admissible m in [20, e^5 ~ 148.4]
    lo, hi = m_range(10, 64, 2.0)
    assert lo == 20.0 and math.isclose(hi, math.exp(5.0))
    DesignConfig(n=10, m=64, seed=0, c_config=2.0, mode=Mode.REFERENCE)
    for bad_m in (10, 200):
        assert not m_range_ok(10, bad_m, 2.0)
        with pytest.raises(InvalidConfig):
            DesignConfig(n=10, m=bad_m, seed=0, c_config=2.0, mode=Mode.REFERENCE)


def test_desk_mode_reports_but_does_not_enforce():
    cfg = DesignConfig(n=10, m=10, seed=0, c_config=2.0, mode=Mode.DESK)
    sys_ = generate_design(cfg)
    assert sys_.m == 10


# ---------------------------------------------------------------------------
# Generation.
# ---------------------------------------------------------------------------

def test_generate_deterministic_bit_identical():
    a = generate_design(DesignConfig(n=2, m=2, seed=7))
    b = generate_design(DesignConfig(n=2, m=2, seed=7))
    assert np.array_equal(a.vectors, b.vectors)
    c = generate_design(DesignConfig(n=2, m=2, seed=8))
    assert not np.array_equal(a.vectors, c.vectors)


def test_generate_worker_count_independent(monkeypatch):
    monkeypatch.setenv("HARDBODY_THREADS", "1")
    a = generate_design(DesignConfig(n=5, m=300, seed=11))
    monkeypatch.setenv("HARDBODY_THREADS", "4")
    b = generate_design(DesignConfig(n=5, m=300, seed=11))
    assert np.array_equal(a.vectors, b.vectors)


def test_generate_scale():
    # vectors are standard gaussians divided by delta, so the empirical
    # coordinate variance must sit near 1/delta^2
    cfg = DesignConfig(n=64, m=512, seed=0)
    sys_ = generate_design(cfg)
    var = sys_.vectors.var()
    assert abs(var * cfg.delta ** 2 - 1.0) < 0.02


def test_generated_shapes_and_delta():
    cfg = DesignConfig(n=3, m=17, seed=2)
    sys_ = generate_design(cfg)
    assert sys_.vectors.shape == (17, 3)
    assert sys_.delta == cfg.delta
    assert sys_.n == 3 and sys_.m == 17


# ---------------------------------------------------------------------------
# Verification: hand-built systems with arithmetic oracles.
# ---------------------------------------------------------------------------

def _axis_system(n, m, delta, scale):
    root = math.sqrt(n) / delta
    V = np.zeros((m, n))
    for i in range(m):
        V[i, i % n] = scale * root
    return QuasiOrthogonalSystem(vectors=V, delta=delta, n=n, m=m)


def test_verify_orthogonal_pair_passes():
    sys_ = _axis_system(n=4, m=2, delta=1.3, scale=1.0)
    rep = verify_design(sys_)
    assert rep.passed
    assert rep.norm_violations == []
    assert rep.inner_product_violations == []
    lo, hi, ip = rep.extremal_values
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)
    assert ip == 0.0


def test_verify_duplicate_vector_inner_product_violation():
    # x1 = x2 = (sqrt(n)/delta, 0, ...): <x1,x2> = n/delta^2 = 25 > 5 = bound
    n, delta = 100, 2.0
    root = math.sqrt(n) / delta
    V = np.zeros((2, n))
    V[0, 0] = root
    V[1, 0] = root
    rep = verify_design(QuasiOrthogonalSystem(vectors=V, delta=delta, n=n, m=2))
    assert not rep.passed
    assert rep.norm_violations == []
    assert rep.inner_product_violations == [(0, 1, 25.0)]


def test_verify_norm_violation_indexed():
    sys_ = _axis_system(n=9, m=3, delta=2.0, scale=1.0)
    sys_.vectors[1] *= 3.0                   # push one norm to 3*sqrt(n)/delta
    rep = verify_design(sys_)
    assert rep.norm_violations == [1]
    assert not rep.passed


def test_verify_boundary_is_inclusive():
    # the defining inequalities are <=; exactly-on-boundary norms pass
    sys_ = _axis_system(n=4, m=2, delta=1.0, scale=2.0)
    assert verify_design(sys_).passed
    sys_ = _axis_system(n=4, m=2, delta=1.0, scale=0.5)
    assert verify_design(sys_).passed


def test_verify_prefilter_matches_bruteforce():
    # m > 512 takes the float32 prefilter path; compare against a direct
    # float64 scan on a small instance pushed over that threshold
    cfg = DesignConfig(n=6, m=600, seed=4)
    sys_ = generate_design(cfg)
    rep = verify_design(sys_)
    G = sys_.vectors @ sys_.vectors.T
    np.fill_diagonal(G, 0.0)
    assert rep.extremal_values[2] == pytest.approx(
        abs(G).max() * sys_.delta / math.sqrt(6), abs=0.0)
    thr = sys_.ip_bound
    ii, jj = np.where(np.triu(abs(G), 1) > thr)
    assert rep.inner_product_violations == [
        (int(i), int(j), float(G[i, j])) for i, j in zip(ii, jj)]


def test_verify_desk_pass_smoke():
    rep = verify_design(generate_design(DesignConfig(n=64, m=512, seed=0)))
    assert rep.passed
    lo, hi, ip = rep.extremal_values
    assert 0.5 <= lo <= hi <= 2.0
    assert ip <= 1.0


def test_scaling_covariance():
    # scaling the gaussians by lam while shrinking delta to delta/lam leaves
    # the scaled norm extremals unchanged and multiplies the scaled
    # inner-product extremal by lam: norms and their bounds both pick up a
    # factor lam (exact status invariance), while inner products grow as
    # lam^2 against a lam-scaled bound. Status is therefore preserved only
    # while the scaled extremal stays below 1, which small lam guarantees.
    for seed in (0, 1, 2):
        cfg = DesignConfig(n=16, m=128, seed=seed)
        base = generate_design(cfg)
        rep0 = verify_design(base)
        for lam in (0.5, 1.05, 1.5):
            scaled = QuasiOrthogonalSystem(vectors=base.vectors * lam,
                                           delta=base.delta / lam,
                                           n=base.n, m=base.m)
            rep = verify_design(scaled)
            assert rep.norm_violations == rep0.norm_violations
            assert rep.extremal_values[0] == pytest.approx(
                rep0.extremal_values[0], rel=1e-12)
            assert rep.extremal_values[1] == pytest.approx(
                rep0.extremal_values[1], rel=1e-12)
            assert rep.extremal_values[2] == pytest.approx(
                lam * rep0.extremal_values[2], rel=1e-12)
            if lam * rep0.extremal_values[2] < 1.0:
                assert rep.passed == rep0.passed


# ---------------------------------------------------------------------------
# Tail probabilities.
# ---------------------------------------------------------------------------

def test_tail_threshold_zero_is_one():
    d = np.zeros((1, 4))
    d[0, 0] = 1.0
    est = tail_probability("gaussian", d, 0.0, trials=500, seed=0)
    assert est.value == 1.0


def test_tail_gaussian_matches_normal_two_sided():
    d = np.zeros((1, 3))
    d[0, 1] = 1.0
    est = tail_probability("gaussian", d, 1.96, trials=100_000, seed=1)
    # 2*(1 - Phi(1.96)), precomputed
    assert abs(est.value - 0.04999579029644087) <= 3.0 * est.stderr


def test_tail_sphere_orthonormal_small():
    n, m = 1000, 100
    D = np.eye(n)[:m]
    thr = 3.0 * math.sqrt(math.log(m))
    est = tail_probability("sphere", D, thr, trials=10_000, seed=2)
    assert est.value <= 0.01


def test_tail_monotone_in_threshold_same_seed():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((5, 6))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    vals = [tail_probability("ball", D, t, trials=4000, seed=4).value
            for t in (0.5, 1.0, 1.5, 2.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_tail_rejects_non_unit_directions():
    with pytest.raises(NonUnitDirection):
        tail_probability("gaussian", np.ones((1, 4)), 1.0, trials=10, seed=0)


def test_tail_rejects_unknown_kind():
    d = np.zeros((1, 2))
    d[0, 0] = 1.0
    with pytest.raises(InvalidConfig):
        tail_probability("cauchy", d, 1.0, trials=10, seed=0)


def test_tail_worker_count_independent(monkeypatch):
    d = np.zeros((1, 2))
    d[0, 0] = 1.0
    monkeypatch.setenv("HARDBODY_THREADS", "1")
    a = tail_probability("gaussian", d, 1.5, trials=30_000, seed=5)
    monkeypatch.setenv("HARDBODY_THREADS", "8")
    b = tail_probability("gaussian", d, 1.5, trials=30_000, seed=5)
    assert a.value == b.value and a.stderr == b.stderr


# ---------------------------------------------------------------------------
# Serialization.
# ---------------------------------------------------------------------------

def test_json_round_trip_bit_exact():
    sys_ = generate_design(DesignConfig(n=7, m=23, seed=9))
    text = design_to_json(sys_, seed=9)
    doc = json.loads(text)                   # must parse as plain JSON
    assert doc["n"] == 7 and doc["m"] == 23 and doc["seed"] == 9
    back = design_from_json(text)
    assert np.array_equal(back.vectors, sys_.vectors)
    assert back.delta == sys_.delta
