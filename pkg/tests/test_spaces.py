import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lipperturb.errors import DegenerateNormError, StructuralError
from lipperturb.spaces import (INF, DirectSumNorm, NormDescriptor, NormedSpace, PartialSumNorm,
                               Vector, distance, lp, norm, seq_embed)

finite = st.floats(-1e6, 1e6, allow_nan=False)
P_VALUES = [1.0, 1.5, 2.0, 3.0, INF]


@pytest.mark.parametrize("p,ord_", [(1.0, 1), (2.0, 2), (3.0, 3), (INF, np.inf)])
def test_unweighted_matches_numpy(p, ord_):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 5))
    np.testing.assert_allclose(lp(5, p).norm_rows(X), np.linalg.norm(X, ord=ord_, axis=1),
                               rtol=1e-14)


def test_weighted_norm_closed_form():
    w = (1.0, 4.0, 9.0)
    v = np.array([1.0, -1.0, 2.0])
    assert norm(lp(3, 2.0, w), v) == pytest.approx(math.sqrt(1 + 4 + 36), rel=1e-15)
    assert norm(lp(3, 1.0, w), v) == pytest.approx(1 + 4 + 18)
    assert norm(lp(3, INF, w), v) == pytest.approx(18.0)


def test_extreme_magnitudes_do_not_overflow():
    X = lp(2)
    assert norm(X, [3e200, 4e200]) == pytest.approx(5e200)
    assert norm(X, [3e-200, 4e-200]) == pytest.approx(5e-200)


def test_p_parsing():
    assert lp(2, "inf").p is INF
    assert lp(2, float("inf")).p is INF
    with pytest.raises(ValueError):
        lp(2, 0.5)
    with pytest.raises(ValueError):
        NormDescriptor(2.0, (1.0, -1.0))


def test_dimension_checks():
    with pytest.raises(StructuralError):
        lp(3, 2.0, (1.0, 1.0))
    with pytest.raises(StructuralError):
        norm(lp(3), [1.0, 2.0])
    with pytest.raises(StructuralError):
        Vector(lp(2), [1.0, 2.0]) - Vector(lp(3), [1.0, 2.0, 3.0])
    with pytest.raises(StructuralError):
        NormedSpace(0)


def test_vector_rejects_nonfinite():
    with pytest.raises(ValueError):
        Vector(lp(2), [1.0, float("nan")])


def test_seq_embed_pads_and_rejects_overflow():
    v = seq_embed(lp(4), [1.0, 2.0])
    assert v.coords.tolist() == [1.0, 2.0, 0.0, 0.0]
    with pytest.raises(StructuralError):
        seq_embed(lp(1), [1.0, 2.0])


def test_distance_is_norm_of_difference():
    X = lp(3, 1.0)
    assert distance(X, [1, 2, 3], [0, 0, 1]) == 5.0


def test_partial_sum_norm_closed_form():
    atoms = np.array([[1.0, 0.0], [-1.0, 1.0]])
    Z = NormedSpace(2, PartialSumNorm(atoms, NormDescriptor(INF)))
    # partial sums of (2, 1): (2, 0), then (1, 1)
    assert norm(Z, [2.0, 1.0]) == 2.0
    assert norm(Z, [1.0, 3.0]) == 3.0  # (1, 0) then (-2, 3)


def test_partial_sum_norm_rejects_zero_atom():
    with pytest.raises(DegenerateNormError) as exc:
        PartialSumNorm(np.array([[1.0, 0.0], [0.0, 0.0]]), NormDescriptor())
    assert exc.value.witness.tolist() == [0.0, 1.0]


def test_direct_sum_is_max_of_parts():
    D = DirectSumNorm((NormDescriptor(1.0), NormDescriptor(2.0)), (2, 1))
    assert D.norm_rows(np.array([1.0, 1.0, -5.0])) == 5.0
    assert D.norm_rows(np.array([3.0, 1.0, -2.0])) == 4.0


def test_space_dict_round_trip():
    for X in (lp(3, 1.0), lp(2, INF, (2.0, 3.0)),
              NormedSpace(2, PartialSumNorm(np.eye(2), NormDescriptor(3.0)))):
        Y = NormedSpace.from_dict(X.to_dict())
        assert Y == X
    with pytest.raises(ValueError):
        NormedSpace.from_dict({"dim": 2, "q": 2})


@settings(max_examples=60, deadline=None)
@given(p=st.sampled_from(P_VALUES), dim=st.integers(1, 6), data=st.data())
def test_norm_axioms(p, dim, data):
    w = data.draw(st.none() | st.lists(st.floats(0.1, 10.0), min_size=dim, max_size=dim))
    X = lp(dim, p, w)
    u = data.draw(arrays(float, dim, elements=finite))
    v = data.draw(arrays(float, dim, elements=finite))
    c = data.draw(finite)
    nu, nv = norm(X, u), norm(X, v)
    assert norm(X, u + v) <= (nu + nv) * (1 + 1e-12) + 1e-300
    assert norm(X, c * u) == pytest.approx(abs(c) * nu, rel=1e-12, abs=1e-300)
    assert (nu == 0) == (not np.any(u))


def moderate(bound):
    # zero or |x| >= 1e-100, so products of two entries stay representable
    mag = st.floats(1e-100, bound)
    return st.just(0.0) | mag | mag.map(lambda x: -x)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), n=st.integers(1, 5), p=st.sampled_from(P_VALUES))
def test_partial_sum_norm_axioms(data, n, p):
    atoms = data.draw(arrays(float, (n, 3), elements=moderate(5.0)))
    base = NormDescriptor(p)
    if np.any(base.norm_rows(atoms) == 0):
        with pytest.raises(DegenerateNormError):
            PartialSumNorm(atoms, base)
        return
    Z = NormedSpace(n, PartialSumNorm(atoms, base))
    u = data.draw(arrays(float, n, elements=moderate(100.0)))
    v = data.draw(arrays(float, n, elements=moderate(100.0)))
    assert norm(Z, u + v) <= (norm(Z, u) + norm(Z, v)) * (1 + 1e-12) + 1e-12
    if np.any(u):
        assert norm(Z, u) > 0
