from fractions import Fraction as Fr

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipperturb.errors import DomainError
from lipperturb.perturb import (bounds_barbagallo, bounds_guo, bounds_hilding,
                                bounds_lambda2_one, bounds_main, bounds_p_combined,
                                bounds_soderlind, guo_epsilon_sweep, p_cap, q_contraction_rate,
                                reduce_p_combined)

unit = st.floats(0.0, 0.999, allow_nan=False)


def _main_oracle(l1, l2, ls, lsi):
    l1, l2, ls, lsi = (Fr(x) for x in (l1, l2, ls, lsi))
    return [float(v) for v in ((1 - l1) / (1 + l2) * ls, (1 + l1) / (1 - l2) * ls,
                               (1 - l2) / (1 + l1) / ls, (1 + l2) / (1 - l1) * lsi,
                               (1 - l1) / (1 + l2))]


@pytest.mark.parametrize("args", [(0.2, 0.1, 2.0, 1.0), (0.0, 0.0, 1.0, 1.0),
                                  (0.5, 0.25, 0.5, 4.0), (0.9, 0.0, 3.0, 0.5)])
def test_main_matches_rational_oracle(args):
    got = bounds_main(*args).values()
    for g, w in zip(got, _main_oracle(*args)):
        assert g == pytest.approx(w, rel=1e-15)


def test_main_frozen_values():
    rep = bounds_main(0.2, 0.1, 2.0, 1.0)
    assert rep.lip_Tinv_upper == pytest.approx(1.375, rel=1e-15)
    assert rep.lip_Tinv_lower == pytest.approx(0.375, rel=1e-15)
    assert rep.invertibility_threshold == pytest.approx(8 / 11, rel=1e-15)


@pytest.mark.parametrize("l1,l2,name", [(1.0, 0.1, "lambda1"), (0.1, 1.0, "lambda2"),
                                        (-0.1, 0.1, "lambda1"), (float("nan"), 0.0, "lambda1")])
def test_main_domain_errors_name_the_parameter(l1, l2, name):
    with pytest.raises(DomainError) as exc:
        bounds_main(l1, l2)
    assert exc.value.parameter == name
    assert name in str(exc.value)


def test_main_near_one_stays_finite():
    rep = bounds_main(1 - 1e-9, 0.0)
    assert math.isfinite(rep.lip_Tinv_upper) and rep.lip_Tinv_upper > 1e8
    with pytest.raises(DomainError):
        bounds_main(0.5, 0.0, lip_s=0.0)
    with pytest.raises(DomainError):
        bounds_main(1 - 1e-16, 0.0, lip_sinv=1e300)


def test_equal_constant_form_matches_main():
    for lam in np.linspace(0, 0.99, 100):
        assert bounds_hilding(lam).values() == bounds_main(lam, lam).values()
    assert bounds_hilding(0.0).values() == (1.0,) * 5


def test_eps_family_closed_form():
    l1, l2, eps, L = 0.1, 1.0, 0.2, 1.5
    rep = bounds_guo(l1, l2, eps, L, lip_s=2.0, lip_sinv=0.5)
    a = l1 + eps * L
    assert rep.lip_T_lower == pytest.approx((1 - a) / (1 + l2 - eps) * 2.0, rel=1e-15)
    assert rep.lip_T_upper == pytest.approx((1 + a) / (1 - l2 + eps) * 2.0, rel=1e-15)
    assert rep.lip_Tinv_upper == pytest.approx((1 + l2 - eps) / (1 - a) * 0.5, rel=1e-15)
    assert rep.inputs["effective_lambda2"] == pytest.approx(0.8)


@pytest.mark.parametrize("eps", [0.0, 1.0, 0.7, -0.1])
def test_eps_family_rejects_inadmissible_eps(eps):
    with pytest.raises(DomainError) as exc:
        bounds_guo(0.1, 0.6, eps, 1.5)
    assert exc.value.parameter == "eps"


def test_eps_sweep_picks_grid_minimum():
    grid = np.linspace(0.01, 0.99, 50)
    sw = guo_epsilon_sweep(0.1, 1.0, 1.2, grid)
    vals = sw.lip_Tinv_upper
    assert np.isnan(vals).any()  # some eps violate lambda1 + eps L < 1
    assert sw.best.lip_Tinv_upper == np.nanmin(vals)
    none = guo_epsilon_sweep(0.1, 0.5, 1.0, [0.6, 0.7])
    assert none.best is None


def test_p_combined_reduction():
    assert reduce_p_combined(0.3, 0.4, 1.0) == (0.3, 0.4)
    assert reduce_p_combined(0.3, 0.4, 3.5) == (0.3, 0.4)
    l1, l2 = reduce_p_combined(0.2, 0.3, 0.5)
    assert (l1, l2) == pytest.approx((0.4, 0.6), rel=1e-15)
    assert p_cap(0.5) == 0.5 and p_cap(2.0) == 1.0
    with pytest.raises(DomainError) as exc:
        reduce_p_combined(0.6, 0.1, 0.5)
    assert exc.value.parameter == "lambda1"
    with pytest.raises(DomainError):
        reduce_p_combined(0.1, 0.1, 0.0)
    assert bounds_p_combined(0.2, 0.3, 0.5).values() == bounds_main(0.4, 0.6).values()


def test_lambda2_one_and_scaled_inverse_bounds():
    assert bounds_lambda2_one(0.5, 3.0) == pytest.approx(12.0)
    assert bounds_soderlind(2.0, 0.5) == pytest.approx(4.0)
    for beta in np.linspace(0, 0.95, 20):
        assert bounds_soderlind(3.0, beta) == pytest.approx(
            3.0 * bounds_main(beta, 0.0).lip_Tinv_upper, rel=1e-12)
    assert bounds_barbagallo(2.0, 0.25) == pytest.approx(0.75 / (2.0 * 0.5))
    assert bounds_barbagallo(2.0, 0.25, hilbert=True) == pytest.approx(0.625)
    with pytest.raises(DomainError) as exc:
        bounds_barbagallo(2.0, 0.5)
    assert exc.value.parameter == "beta"
    assert bounds_barbagallo(2.0, 0.75, hilbert=True) == pytest.approx(0.875)


def test_q_rate():
    assert q_contraction_rate(0.2, 0.5) == pytest.approx(1.4)
    assert q_contraction_rate(0.3, 0.0) == 0.3
    with pytest.raises(DomainError):
        q_contraction_rate(0.1, 1.0)


@settings(max_examples=200, deadline=None)
@given(l1=unit, l2=unit, ls=st.floats(0.1, 10), kappa=st.floats(1.0, 10))
def test_main_bounds_are_ordered(l1, l2, ls, kappa):
    lsi = kappa / ls  # Lip(S) Lip(S^-1) >= 1 for any invertible S
    rep = bounds_main(l1, l2, ls, lsi)
    assert rep.lip_T_lower <= ls <= rep.lip_T_upper
    assert rep.lip_Tinv_lower <= rep.lip_Tinv_upper * (1 + 1e-12)
    assert 0 < rep.invertibility_threshold <= 1


@settings(max_examples=100, deadline=None)
@given(l1=unit, l2=unit, d=st.floats(0.0, 0.05))
def test_main_bounds_widen_monotonically(l1, l2, d):
    a = bounds_main(l1, l2)
    b = bounds_main(min(l1 + d, 0.999), min(l2 + d, 0.999))
    assert b.lip_T_lower <= a.lip_T_lower and b.lip_T_upper >= a.lip_T_upper
    assert b.lip_Tinv_upper >= a.lip_Tinv_upper
