import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import exact_rank, first_projection_norm_grid, frame_bounds_l2
from lipperturb.atomic import (AtomicDecomposition, basis_decomposition, check_decomposition,
                               dilate, elimination_rank, graph_embedding, lift_decomposition,
                               perturb_decomposition, schauder_check, z_norm_violations)
from lipperturb.errors import (DegenerateNormError, PreconditionError, StructuralError,
                               UnsupportedConfigurationError)
from lipperturb.maps import affine, componentwise, custom, linear_functional
from lipperturb.perturb import given_profile
from lipperturb.sampling import SamplerConfig
from lipperturb.spaces import INF, lp


def redundant_decomposition(rng, d, extra, p=2.0):
    """Functionals V = [B; R], atoms = [B^-T; 0]: the last ``extra`` atoms vanish."""
    B = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    V = np.vstack([B, rng.standard_normal((extra, d))])
    atoms = np.vstack([np.linalg.inv(B).T, np.zeros((extra, d))])
    X, seq = lp(d, p), lp(d + extra, p)
    fs = tuple(linear_functional(v, X) for v in V)
    return AtomicDecomposition(fs, atoms, seq, frame_bounds_l2(V))


def lifted(eps=0.3):
    phi = componentwise("tanh", lp(2), eps=eps, beta=1.0)
    A, B, consts = graph_embedding(phi)
    base = basis_decomposition(np.eye(4), lp(4))
    return lift_decomposition(base, A, B, consts, SamplerConfig(count=20, seed=0)), consts


# ------------------------------------------------------------------ basics

@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_basis_decomposition_bounds_are_attained(p):
    rng = np.random.default_rng(1)
    W = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
    D = basis_decomposition(W, lp(3, p))
    rep = check_decomposition(D, SamplerConfig(count=40, seed=2))
    assert rep.passed and rep.reconstruction_max_error <= 1e-12
    assert "finite sum" in rep.convergence
    np.testing.assert_allclose(D.reconstruct(np.eye(3)), np.eye(3), atol=1e-12)


def test_decomposition_validation():
    X = lp(2)
    f = linear_functional([1.0, 0.0], X)
    with pytest.raises(StructuralError):
        AtomicDecomposition((f,), np.zeros((2, 2)), lp(2), (1.0, 1.0))
    with pytest.raises(StructuralError):
        AtomicDecomposition((f,), np.zeros((1, 3)), lp(2), (1.0, 1.0))
    with pytest.raises(ValueError):
        AtomicDecomposition((f,), [[np.inf, 0.0]], lp(2), (1.0, 1.0))
    with pytest.raises(ValueError):
        AtomicDecomposition((f,), [[1.0, 0.0]], lp(2), (0.0, 1.0))


def test_decomposition_dict_round_trip():
    D = redundant_decomposition(np.random.default_rng(3), 2, 1)
    E = AtomicDecomposition.from_dict(D.to_dict())
    np.testing.assert_array_equal(E.atoms, D.atoms)
    X = np.random.default_rng(4).standard_normal((5, 2))
    np.testing.assert_array_equal(E.theta(X), D.theta(X))


def test_check_detects_wrong_atoms():
    D = basis_decomposition(np.eye(2), lp(2))
    bad = AtomicDecomposition(D.functionals, 1.1 * D.atoms, D.seq_space, D.claimed_bounds)
    rep = check_decomposition(bad, SamplerConfig(count=10))
    assert not rep.reconstruction_ok and not rep.passed


# ------------------------------------------------------------------ lifting

def test_lifting_through_graph_embedding():
    L, (lo, hi) = lifted()
    # x + 0.3 tanh(x) has slopes in [1, 1.3]
    assert (lo, hi) == pytest.approx((math.sqrt(2.0), math.sqrt(1 + 1.3 ** 2)))
    np.testing.assert_array_equal(L.atoms, np.vstack([np.eye(2), np.zeros((2, 2))]))
    assert L.claimed_bounds == pytest.approx((lo, hi))
    assert check_decomposition(L, SamplerConfig(count=40, seed=5)).passed


def test_lifting_preconditions():
    base = basis_decomposition(np.eye(4), lp(4))
    phi = componentwise("tanh", lp(2), eps=0.3, beta=1.0)
    A, B, consts = graph_embedding(phi)
    sam = SamplerConfig(count=10)
    nonlinear_B = custom(lambda V: V[:, :2] ** 3, lp(4), lp(2))
    with pytest.raises(PreconditionError):
        lift_decomposition(base, A, nonlinear_B, consts, sam)
    wrong_B = affine(np.hstack([2 * np.eye(2), np.zeros((2, 2))]), None, lp(4), lp(2))
    with pytest.raises(PreconditionError):
        lift_decomposition(base, A, wrong_B, consts, sam)
    with pytest.raises(ValueError):
        lift_decomposition(base, A, B, (0.0, 1.0), sam)
    with pytest.raises(UnsupportedConfigurationError):
        graph_embedding(affine(np.eye(2)))


def test_graph_embedding_linf_constants():
    phi = componentwise("sin", lp(2, INF), eps=0.5, beta=1.0)
    _, _, consts = graph_embedding(phi)
    assert consts == (1.0, 1.5)


# ------------------------------------------------------------------ Schauder

@pytest.mark.parametrize("eps", [1.0, 0.1, 1e-2, 1e-3])
def test_schauder_constant_near_dependent_pair(eps):
    rep = schauder_check(np.array([[1.0, 0.0], [1.0, eps]]), lp(2))
    assert rep.passed
    assert rep.basis_constant_estimate == pytest.approx(math.sqrt(1 + eps * eps) / eps, rel=1e-9)


@pytest.mark.parametrize("p,key", [(1.0, 1), (2.0, 2), (INF, "inf")])
def test_schauder_two_atoms_against_grid(p, key):
    rng = np.random.default_rng(7)
    for _ in range(5):
        t = rng.standard_normal((2, 2))
        rep = schauder_check(t, lp(2, p))
        oracle = max(1.0, first_projection_norm_grid(t[0], t[1], key))
        assert rep.basis_constant_estimate >= oracle * (1 - 1e-12)
        assert rep.basis_constant_estimate == pytest.approx(oracle, rel=1e-6)


def test_schauder_failures_have_reasons():
    X = lp(2)
    dep = schauder_check(np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]), X)
    assert not dep.passed and not dep.independent and dep.rank == 2
    assert math.isinf(dep.basis_constant_estimate)
    zero = schauder_check(np.array([[1.0, 0.0], [0.0, 0.0]]), X)
    assert not zero.nonzero and not zero.span_ok
    assert any("zero atoms" in r for r in zero.reasons)
    with pytest.raises(StructuralError):
        schauder_check(np.ones((2, 3)), X)


def test_elimination_rank_matches_exact_rank():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m, n, r = rng.integers(1, 7, size=3)
        M = rng.integers(-3, 4, size=(m, min(r, n))) @ rng.integers(-3, 4, size=(min(r, n), n))
        assert elimination_rank(M.astype(float)) == exact_rank(M)
    assert elimination_rank(np.zeros((3, 3))) == 0


@settings(max_examples=80, deadline=None)
@given(M=arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                elements=st.integers(-4, 4).map(float)))
def test_elimination_rank_property(M):
    assert elimination_rank(M) == exact_rank(M.astype(int))


# ------------------------------------------------------------------ dilation

def test_dilation_case_i():
    D = basis_decomposition(np.array([[1.0, 0.5], [0.0, 1.0]]), lp(2))
    res = dilate(D, seed=1)
    assert res.case == "i" and res.zero_atom_indices == ()
    for key in ("idempotence_err", "reconstruction_err", "atom_image_err"):
        assert res.checks[key] <= 1e-10
    M = res.matrix()
    np.testing.assert_allclose(M @ M, M, atol=1e-12)


def test_dilation_case_ii_with_zero_atoms():
    D = redundant_decomposition(np.random.default_rng(10), 3, 2)
    res = dilate(D, seed=2)
    assert res.case == "ii" and res.zero_atom_indices == (3, 4)
    assert res.functionals_zeroed == (3, 4)
    assert res.order == (0, 1, 2, 3, 4)
    for key in ("idempotence_err", "reconstruction_err", "atom_image_err"):
        assert res.checks[key] <= 1e-10
    zn = z_norm_violations(res.Z, count=2000, seed=3)
    assert zn["triangle"] == zn["homogeneity"] == zn["nonpositive"] == 0
    assert res.to_dict()["direct_sum_norm"] == "max"


def test_dilation_nonlinear_functionals():
    L, _ = lifted()
    res = dilate(L, seed=0)
    assert res.case == "ii" and res.matrix() is None
    assert res.checks["reconstruction_err"] <= 1e-10


def test_dilation_all_zero_atoms():
    f = linear_functional([1.0], lp(1))
    D = AtomicDecomposition((f,), [[0.0]], lp(1), (1.0, 1.0))
    with pytest.raises(DegenerateNormError):
        dilate(D)


# ------------------------------------------------------------------ perturbation

def test_scalar_family_closed_form():
    D = redundant_decomposition(np.random.default_rng(11), 2, 0)
    delta = 0.08
    E = perturb_decomposition(D, (1 + delta) * D.atoms, given_profile(delta, 0.0),
                              SamplerConfig(count=20, seed=0))
    X = np.random.default_rng(12).standard_normal((15, 2))
    np.testing.assert_allclose(E.theta(X), D.theta(X) / (1 + delta), rtol=1e-9, atol=1e-12)
    a, b = D.claimed_bounds
    assert E.claimed_bounds == pytest.approx((a / (1 + delta), b * 1 / (1 - delta)))


def test_perturbed_nonlinear_decomposition_validates():
    L, _ = lifted()
    rng = np.random.default_rng(13)
    Edir = rng.standard_normal(L.atoms.shape)
    mu = 0.2
    W = L.atoms + mu * Edir / np.linalg.norm(Edir, 2)
    E = perturb_decomposition(L, W, given_profile(0.0, 0.0, mu=mu, frame_upper=L.claimed_bounds[1]),
                              SamplerConfig(count=20, seed=1))
    assert check_decomposition(E, SamplerConfig(count=20, seed=2)).passed


def test_perturbation_refuses_bad_input():
    D = basis_decomposition(np.eye(2), lp(2))
    with pytest.raises(StructuralError):
        perturb_decomposition(D, np.eye(3), given_profile(0.1, 0.0), SamplerConfig(count=5))
    with pytest.raises(PreconditionError):
        perturb_decomposition(D, 1.5 * np.eye(2), given_profile(0.1, 0.0),
                              SamplerConfig(count=10))
