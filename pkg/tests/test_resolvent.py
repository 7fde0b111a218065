import numpy as np
import pytest

from lipperturb.maps import affine, componentwise, composite, identity
from lipperturb.perturb import (estimate_profile, exact_invertibility, given_profile,
                                resolvent_scan)
from lipperturb.sampling import SamplerConfig
from lipperturb.spaces import lp


def test_exact_invertibility():
    smin, smax, inv = exact_invertibility(np.diag([2.0, 1e-12]))
    assert smin == pytest.approx(1e-12) and smax == 2.0 and not inv
    assert exact_invertibility(np.eye(3))[2]
    assert not exact_invertibility(np.zeros((2, 2)))[2]


def test_threshold_and_guaranteed_flags():
    X = lp(2)
    S, T = identity(X), affine(1.2 * np.eye(2), None, X, X)
    prof = given_profile(0.2, 0.0)
    rep = resolvent_scan(S, T, prof, [0.0, 0.5, 0.79, 0.8, 1.2, 2.0], SamplerConfig(count=10))
    assert rep.threshold == pytest.approx(0.8)
    assert [e.guaranteed for e in rep.entries] == [True, True, True, False, False, False]
    # alpha I - 1.2 I is singular exactly at alpha = 1.2, outside the guaranteed half-line
    sing = [e.alpha for e in rep.entries if e.exact_invertible is False]
    assert sing == [1.2]
    assert rep.passed and rep.affine
    assert rep.entries[0].sample_bilip_lower == pytest.approx(1.2)


def test_wrong_constants_are_flagged():
    X = lp(2)
    S, T = identity(X), affine(0.5 * np.eye(2), None, X, X)
    # true lambda1 is 0.5; claiming 0 puts alpha = 0.5 inside the "guaranteed" range
    rep = resolvent_scan(S, T, given_profile(0.0, 0.0), [0.5], SamplerConfig(count=10))
    assert not rep.passed and rep.violations == (0.5,)


def test_estimated_profiles_never_violate():
    rng = np.random.default_rng(8)
    X = lp(3)
    for _ in range(10):
        A = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
        E = rng.standard_normal((3, 3))
        E *= 0.3 * np.linalg.norm(A, 2) / np.linalg.norm(E, 2) / np.linalg.cond(A)
        S, T = affine(A, None, X, X), affine(A + E, None, X, X)
        sam = SamplerConfig(count=20, seed=1)
        rep = resolvent_scan(S, T, estimate_profile(S, T, sam), np.linspace(-2, 2, 21), sam)
        assert rep.passed


def test_nonlinear_pair_reports_samples_only():
    X = lp(2)
    T = composite([identity(X), componentwise("tanh", X, eps=0.2, beta=1.0)])
    rep = resolvent_scan(identity(X), T, given_profile(0.2, 0.0), [0.0, 0.5],
                         SamplerConfig(count=15))
    assert not rep.affine and all(e.exact_invertible is None for e in rep.entries)
    assert rep.entries[0].sample_bilip_lower >= 1.0 - 1e-12
    d = rep.to_dict()
    assert d["passed"] and len(d["entries"]) == 2
