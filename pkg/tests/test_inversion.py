import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bisect_monotone
from lipperturb.errors import DomainError, NonconvergenceError, UnsupportedConfigurationError
from lipperturb.maps import affine, componentwise, composite, custom, identity
from lipperturb.perturb import (BEST_EFFORT, PICARD, SolverConfig, certificates_of,
                                given_profile, invert_certified, inverse_of,
                                picard_rate_violations)
from lipperturb.spaces import INF, lp


def _scalar_target(a, eps, beta):
    # T(x) = a x + eps tanh(beta a x) = phi(S x) with S = a, so lambda1 = |eps| beta
    X = lp(1)
    S = affine([[a]], None, X, X)
    T = composite([S, componentwise("tanh", X, eps=eps, beta=beta)])
    return S, T


def test_scalar_nonlinear_against_bisection():
    a, eps, beta = 2.0, 0.4, 1.5
    S, T = _scalar_target(a, eps, beta)
    for y in (-3.0, -0.2, 0.0, 0.7, 5.0):
        cert = invert_certified(T, [y], S, given_profile(eps * beta, 0.0))
        x_true = bisect_monotone(lambda x: a * x + eps * mpmath.tanh(beta * a * x), y, -10, 10)
        assert abs(cert.solution.coords[0] - x_true) <= cert.error_radius + 1e-15
        assert cert.contraction_mode == PICARD
        assert cert.lip_sinv_source == "exact" and cert.lip_sinv == pytest.approx(0.5)


@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_affine_certificate_covers_exact_solution(p):
    rng = np.random.default_rng(4)
    X = lp(4, p)
    A = np.eye(4) + 0.1 * rng.standard_normal((4, 4))
    E = 0.05 * rng.standard_normal((4, 4))
    S, T = affine(A, None, X, X), affine(A + E, rng.standard_normal(4), X, X)
    l1 = float(np.linalg.norm(E @ np.linalg.inv(A), {1.0: 1, 2.0: 2}.get(p, np.inf)))
    y = rng.standard_normal(4)
    cert = invert_certified(T, y, S, given_profile(l1, 0.0))
    x_true = np.linalg.solve(A + E, y - T.offset)
    assert X.norm_rows(cert.solution.coords - x_true) <= cert.error_radius
    assert cert.residual <= 1e-12 * max(1.0, X.norm_rows(y))
    assert picard_rate_violations(cert) == 0


def test_picard_rate_matches_q():
    X = lp(3)
    S = identity(X)
    T = composite([S, componentwise("sin", X, eps=0.3, beta=1.0)])
    prof = given_profile(0.3, 0.0)
    cert = invert_certified(T, [1.0, -2.0, 0.5], S, prof)
    assert cert.q == pytest.approx(0.3)
    h = np.array(cert.residual_history)
    assert len(h) > 3 and np.all(h[1:] <= cert.q * h[:-1] * (1 + 1e-9))


def test_best_effort_mode_when_q_at_least_one():
    X = lp(2)
    S = identity(X)
    T = composite([S, componentwise("tanh", X, eps=0.5, beta=1.0)])
    prof = given_profile(0.5, 0.3)  # q = 0.8 / 0.7 > 1, still a valid (loose) profile
    cert = invert_certified(T, [0.4, -1.2], S, prof)
    assert cert.contraction_mode == BEST_EFFORT and cert.q > 1
    x = cert.solution.coords
    for k, y in enumerate((0.4, -1.2)):
        x_true = bisect_monotone(lambda v: v + 0.5 * mpmath.tanh(v), y, -5, 5)
        assert abs(x[k] - x_true) <= cert.error_radius


def test_domain_errors():
    X = lp(2)
    T = identity(X)
    with pytest.raises(DomainError) as exc:
        invert_certified(T, [1.0, 1.0], profile=given_profile(0.1, 1.0))
    assert exc.value.parameter == "lambda2"
    with pytest.raises(DomainError) as exc:
        invert_certified(T, [1.0, 1.0], profile=given_profile(0.5, 0.0, mu=0.5, frame_upper=1.0))
    assert exc.value.parameter == "lambda1"
    with pytest.raises(ValueError):
        invert_certified(T, [1.0, 1.0])
    S = affine(np.ones((2, 2)), None, X, X)
    with pytest.raises(UnsupportedConfigurationError):
        invert_certified(T, [1.0, 1.0], S, given_profile(0.1, 0.0))


def test_nonconvergence_carries_certificate():
    X = lp(1)
    S = identity(X)
    T = composite([S, componentwise("tanh", X, eps=0.9, beta=1.0)])
    cfg = SolverConfig(max_iters=2)
    with pytest.raises(NonconvergenceError) as exc:
        invert_certified(T, [3.0], S, given_profile(0.9, 0.0), cfg)
    cert = exc.value.certificate
    assert cert is not None and not cert.converged
    x_true = bisect_monotone(lambda v: v + 0.9 * mpmath.tanh(v), 3.0, -10, 10)
    assert abs(cert.solution.coords[0] - x_true) <= cert.error_radius
    soft = invert_certified(T, [3.0], S, given_profile(0.9, 0.0), cfg, raise_on_failure=False)
    assert not soft.converged


def test_sampled_lip_sinv_for_custom_reference():
    X = lp(2)
    S = custom(lambda V: 2.0 * V, X, X)
    S_inv = custom(lambda V: 0.5 * V, X, X)
    cert = invert_certified(S, [1.0, 2.0], S, given_profile(0.0, 0.0), S_inv=S_inv)
    assert cert.lip_sinv_source == "sampled-lower-bound"
    assert cert.lip_sinv == pytest.approx(0.5, rel=1e-12)
    np.testing.assert_allclose(cert.solution.coords, [0.5, 1.0])


def test_inverse_handle_caches_certificates():
    X = lp(2)
    T = composite([identity(X), componentwise("tanh", X, eps=0.2, beta=1.0)])
    inv = inverse_of(T, given_profile(0.2, 0.0))
    Y = np.array([[0.1, 0.2], [1.0, -1.0], [0.1, 0.2]])
    Xs = inv(Y)
    np.testing.assert_allclose(T(Xs), Y, atol=1e-12)
    assert len(certificates_of(inv)) == 2
    inv(Y[:1])
    assert len(certificates_of(inv)) == 2
    assert not inv.serializable


def test_certificate_to_dict():
    X = lp(1)
    cert = invert_certified(identity(X), [2.0], profile=given_profile(0.0, 0.0))
    d = cert.to_dict()
    assert d["solution"] == [2.0] and d["residual"] == 0.0 and d["error_radius"] >= 0.0
    assert SolverConfig.from_dict(SolverConfig().to_dict()) == SolverConfig()


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.2, 5.0), eps=st.floats(-0.9, 0.9), beta=st.floats(0.1, 1.0),
       y=st.floats(-20, 20))
def test_scalar_certificates_are_sound(a, eps, beta, y):
    lam = abs(eps) * beta
    S, T = _scalar_target(a, eps, beta)
    cert = invert_certified(T, [y], S, given_profile(lam, 0.0), raise_on_failure=False)
    lo, hi = (y - 1) / a - 1, (y + 1) / a + 1
    x_true = bisect_monotone(lambda x: a * x + eps * mpmath.tanh(beta * a * x), y, lo, hi)
    assert abs(cert.solution.coords[0] - x_true) <= cert.error_radius * (1 + 1e-12) + 1e-300
