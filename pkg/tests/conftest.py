"""Shared fixtures: small verified systems reused across test modules.

Session scope keeps the expensive hull precomputation to one instance per
run. Seeds are pinned to draws that pass verify_design at desk scale; the
defining inequalities genuinely fail on a noticeable fraction of seeds for
n = 16, which is expected behaviour, not flakiness.
"""

import pytest

from hardbody.design import DesignConfig, Mode, generate_design, verify_design


@pytest.fixture(scope="session")
def desk16():
    sys_ = generate_design(DesignConfig(n=16, m=256, seed=0, mode=Mode.DESK))
    assert verify_design(sys_).passed
    return sys_


@pytest.fixture(scope="session")
def desk8():
    # small enough for brute-force cross checks
    sys_ = generate_design(DesignConfig(n=8, m=64, seed=3, mode=Mode.DESK))
    return sys_


@pytest.fixture(scope="session")
def desk4():
    sys_ = generate_design(DesignConfig(n=4, m=32, seed=1, mode=Mode.DESK))
    return sys_
