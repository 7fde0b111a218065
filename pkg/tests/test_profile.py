import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import frontier_grid_check
from lipperturb.errors import InconsistentPairError, NotVerifiableError
from lipperturb.maps import affine, componentwise, composite, identity
from lipperturb.perturb import (Objective, PerturbationProfile, check_profile, check_stats,
                                estimate_profile, estimate_profile_mu, given_profile,
                                pair_stats, pareto_frontier, select_on_frontier)
from lipperturb.perturb.profile import affine_extremal_directions, as_objective
from lipperturb.sampling import SamplerConfig
from lipperturb.spaces import INF, lp


def test_frontier_two_constraints_closed_form():
    # l1 + 2 l2 >= 1 and 2 l1 + l2 >= 1: vertices (0, 1), (1/3, 1/3), (1, 0)
    F = pareto_frontier([1.0, 2.0], [2.0, 1.0], [1.0, 1.0])
    np.testing.assert_allclose(F, [[0.0, 1.0], [1 / 3, 1 / 3], [1.0, 0.0]], atol=1e-15)


def test_frontier_degenerate_inputs():
    assert pareto_frontier([1.0], [1.0], [0.0]).tolist() == [[0.0, 0.0]]
    np.testing.assert_allclose(pareto_frontier([2.0], [0.0], [1.0]), [[0.5, 0.0]])
    np.testing.assert_allclose(pareto_frontier([0.0], [4.0], [1.0]), [[0.0, 0.25]])
    with pytest.raises(InconsistentPairError):
        pareto_frontier([0.0], [0.0], [1.0])


def test_frontier_against_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 60))
        s, t = rng.uniform(0.1, 2, n), rng.uniform(0.1, 2, n)
        r = rng.uniform(0, 1, n) * (s + t) * 0.5
        F = pareto_frontier(s, t, r)
        assert frontier_grid_check(F, s, t, r) == 0
        assert np.all(F[:, None, 0] * s + F[:, None, 1] * t >= r * (1 - 1e-12) - 1e-15)


def test_objectives():
    assert Objective()(0.5, 0.0) == 2.0
    assert Objective("t")(0.0, 0.5) == 2.0
    assert Objective("sum")(0.1, 0.2) == pytest.approx(0.3)
    assert Objective("stability")(0.0, 0.0) == 1.0
    assert as_objective([1.0, 2.0])(0.1, 0.1) == pytest.approx(0.3)
    assert as_objective({"weights": [1, 0]}).name == "weights"
    with pytest.raises(ValueError):
        Objective("weights")
    with pytest.raises(ValueError):
        Objective("median")


def test_select_prefers_objective_minimum():
    F = np.array([[0.0, 0.6], [0.3, 0.0]])
    l1, l2, _ = select_on_frontier(F, Objective("weights", (1.0, 0.0)))
    assert (l1, l2) == (0.0, 0.6)
    l1, l2, _ = select_on_frontier(F, Objective("weights", (0.0, 1.0)))
    assert (l1, l2) == (0.3, 0.0)
    assert select_on_frontier(np.array([[1.5, 0.0]]), Objective()) is None


def test_estimate_profile_identity_scaling():
    # T = (1 + d) S: r = d s and t = (1 + d) s, so the frontier joins (d, 0) and
    # (0, d/(1+d)); the Lip(T^-1) factor is smaller at the second end
    X = lp(3)
    S = affine(np.diag([1.0, 2.0, 3.0]), None, X, X)
    T = affine(1.1 * np.diag([1.0, 2.0, 3.0]), None, X, X)
    prof = estimate_profile(S, T, SamplerConfig(count=20, seed=0))
    assert prof.lambda1 == pytest.approx(0.0, abs=1e-12)
    assert prof.lambda2 == pytest.approx(1 / 11, rel=1e-9)
    np.testing.assert_allclose(prof.frontier, [[0.0, 1 / 11], [0.1, 0.0]], rtol=1e-9, atol=1e-15)
    assert prof.source == "estimated" and prof.pair_count > 0


def test_estimate_profile_not_verifiable():
    X = lp(2)
    with pytest.raises(NotVerifiableError):
        estimate_profile(identity(X), affine(-np.eye(2), None, X, X), SamplerConfig(count=10))


@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_extremal_directions_attain_operator_norm(p):
    rng = np.random.default_rng(3)
    X = lp(4, p)
    A = np.eye(4) + 0.2 * rng.standard_normal((4, 4))
    E = 0.1 * rng.standard_normal((4, 4))
    S, T = affine(A, None, X, X), affine(A + E, None, X, X)
    D = affine_extremal_directions(S, T)
    # direction d with S d = u, where u is extremal for E A^-1
    ratios = X.norm_rows(D @ E.T) / X.norm_rows(D @ A.T)
    from lipperturb.maps import operator_norm
    assert ratios.max() == pytest.approx(operator_norm(E @ np.linalg.inv(A), p), rel=1e-9)


def test_check_profile_detects_violation():
    X = lp(2)
    S = identity(X)
    T = composite([S, componentwise("tanh", X, eps=0.3, beta=1.0)])
    sam = SamplerConfig(count=30, seed=2)
    assert check_profile(S, T, given_profile(0.3, 0.0), sam).passed
    bad = check_profile(S, T, given_profile(0.05, 0.0), sam)
    assert not bad.passed and bad.max_violation > 0


def test_three_constant_estimate_uses_mu():
    rng = np.random.default_rng(5)
    seq, X = lp(3), lp(2)
    V = rng.standard_normal((3, 2))
    S = affine(np.linalg.pinv(V), None, seq, X)
    T = affine(np.linalg.pinv(V) + 0.05 * rng.standard_normal((2, 3)), None, seq, X)
    prof = estimate_profile_mu(S, T, SamplerConfig(count=30, seed=1), [0.0, 0.02, 0.05],
                               frame_upper=2.0)
    st_ = pair_stats(S, T, SamplerConfig(count=30, seed=1))
    assert check_stats(st_, prof.lambda1, prof.lambda2, prof.mu, tol=1e-9).passed
    assert prof.lambda2 < 1 and prof.effective_lambda1() < 1


def test_profile_validation_and_round_trip():
    with pytest.raises(ValueError):
        PerturbationProfile(-0.1, 0.0)
    with pytest.raises(ValueError):
        PerturbationProfile(0.1, 1.0)
    p = given_profile(0.2, 1.0)
    assert p.lambda2_is_one
    q = PerturbationProfile.from_dict(p.to_dict())
    assert q == p
    with pytest.raises(ValueError):
        given_profile(0.1, 0.1, mu=0.2).effective_lambda1()
    assert given_profile(0.1, 0.1, mu=0.2, frame_upper=2.0).effective_lambda1() == pytest.approx(0.5)


pos = st.floats(0.0, 5.0, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(data=st.data(), n=st.integers(1, 40))
def test_frontier_vertices_are_feasible_and_monotone(data, n):
    s = data.draw(arrays(float, n, elements=pos))
    t = data.draw(arrays(float, n, elements=pos))
    frac = data.draw(arrays(float, n, elements=st.floats(0, 1)))
    r = frac * (s + t)
    F = pareto_frontier(s, t, r)
    assert np.all(F >= 0)
    with np.errstate(over="ignore"):
        lhs = F[:, None, 0] * s + F[:, None, 1] * t
    assert np.all(lhs >= r - 1e-9 * np.maximum(1, r))
    assert np.all(np.diff(F[:, 0]) > 0) and np.all(np.diff(F[:, 1]) < 0)
