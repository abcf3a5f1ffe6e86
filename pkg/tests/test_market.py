import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import weighted_kelly as wk
from weighted_kelly import errors, functions


def test_binary_market_is_valid(binary):
    assert binary.m == 2
    assert all(v == 0 for v in binary.validate().values())


def test_fair_coin_is_valid(fair_coin):
    assert fair_coin.probs.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("probs, exc", [
    ([0.7, 0.4], errors.ProbSumError),
    ([1.0, 0.0], errors.NonPositiveProb),
    ([1.2, -0.2], errors.NonPositiveProb),
])
def test_bad_probabilities(probs, exc):
    with pytest.raises(exc):
        wk.build_discrete_market([1, -1], probs, [1, 1], [0.5, 0.5])


def test_other_invariants():
    with pytest.raises(errors.NegativeWeight):
        wk.build_discrete_market([1, -1], [0.5, 0.5], [1, -0.1])
    with pytest.raises(errors.NonPositiveReference):
        wk.build_discrete_market([1, -1], [0.5, 0.5], None, [0.5, 0.0])
    with pytest.raises(errors.DuplicateOutcome):
        wk.build_discrete_market([1, 1], [0.5, 0.5])
    with pytest.raises(errors.InvalidM):
        wk.build_discrete_market([1], [1.0])
    with pytest.raises(errors.DimensionMismatch):
        wk.build_discrete_market([1, -1], [0.5, 0.25, 0.25])


def test_markets_are_immutable(binary):
    with pytest.raises(ValueError):
        binary.probs[0] = 0.9
    with pytest.raises(AttributeError):
        binary.probs = np.array([0.5, 0.5])


def test_uniform_reference():
    assert wk.uniform_reference(2) == [0.5, 0.5]
    assert wk.uniform_reference(4) == [0.25] * 4
    with pytest.raises(errors.InvalidM):
        wk.uniform_reference(1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=6, unique=True),
       st.randoms(use_true_random=False))
def test_order_preserved_and_deterministic(outcomes, rnd):
    m = len(outcomes)
    raw = [rnd.uniform(0.1, 1) for _ in range(m)]
    probs = [r / sum(raw) for r in raw]
    probs[-1] = 1.0 - sum(probs[:-1])
    if min(probs) <= 0:
        return
    a = wk.build_discrete_market(outcomes, probs)
    b = wk.build_discrete_market(outcomes, probs)
    assert a.outcomes.tolist() == [float(x) for x in outcomes]
    assert a.to_dict() == b.to_dict()


def test_gaussian_market_examples(gauss_market):
    assert gauss_market.dim == 1
    wk.build_gaussian_market(2, np.eye(2), 2 * np.eye(2), functions.ConstantWeight(1.0),
                             functions.LinearReturn([1.0, 0.0]))
    with pytest.raises(errors.CovariancesEqual):
        wk.build_gaussian_market(1, [[1.0]], [[1.0]], None, functions.LinearReturn([1.0]))
    with pytest.raises(errors.NotPositiveDefinite):
        wk.build_gaussian_market(2, [[1.0, 2.0], [2.0, 1.0]], np.eye(2), None, functions.LinearReturn([1, 1]))
    with pytest.raises(errors.NotPositiveDefinite):
        wk.build_gaussian_market(2, [[1.0, 0.5], [0.0, 1.0]], np.eye(2), None, functions.LinearReturn([1, 1]))
    with pytest.raises(errors.DimensionMismatch):
        wk.build_gaussian_market(2, [[1.0]], np.eye(2), None, functions.LinearReturn([1, 1]))


def test_gaussian_density_matches_formula(gauss_market):
    x = np.array([[0.0], [1.5], [-2.0]])
    expect = np.exp(-x[:, 0] ** 2 / 2) / np.sqrt(2 * np.pi)
    np.testing.assert_allclose(gauss_market.density(x), expect, rtol=1e-14)
    expect0 = np.exp(-x[:, 0] ** 2 / 4) / np.sqrt(4 * np.pi)
    np.testing.assert_allclose(gauss_market.reference_density(x), expect0, rtol=1e-14)


def test_market_json_round_trip(binary):
    again = wk.market_from_dict(binary.to_dict())
    assert again.to_dict() == binary.to_dict()
    data = {"type": "gaussian", "dim": 1, "sigma": [[1]], "sigma0": [[2]], "weight": "one",
            "return": {"form": "eq24", "D": 0.5}}
    gm = wk.market_from_dict(data)
    assert gm.return_fn(np.array([0.0])) == pytest.approx(2 * (np.sqrt(2) - 1), abs=1e-15)
    assert wk.market_from_dict(gm.to_dict()).to_dict() == gm.to_dict()


def test_weight_catalog():
    box = functions.weight_from_spec({"kind": "box", "lower": [0.0], "upper": [None]}, 1)
    np.testing.assert_array_equal(box(np.array([[-1.0], [0.5], [3.0]])), [0.0, 1.0, 1.0])
    poly = functions.weight_from_spec({"kind": "polynomial", "coeffs": [1.0, 0.0, 2.0]}, 1)
    assert poly(np.array([2.0])) == 9.0
    neg = functions.weight_from_spec({"kind": "polynomial", "coeffs": [0.0, 1.0]}, 1)
    with pytest.raises(errors.NegativeWeight):
        neg(np.array([[-1.0]]))
    with pytest.raises(errors.SchemaError):
        functions.weight_from_spec({"kind": "python", "code": "lambda x: x"}, 1)


def test_grid_market_validation():
    pts = np.array([-1.0, 1.0])
    gm = wk.build_grid_market(pts, [1.0, 1.0], [0.5, 0.5], [0.5, 0.5], [1, 1], [1, -1])
    assert gm.size == 2
    with pytest.raises(errors.ProbSumError):
        wk.build_grid_market(pts, [1.0, 1.0], [0.5, 0.6], [0.5, 0.5], [1, 1], [1, -1])
    with pytest.raises(errors.NonPositiveReference):
        wk.build_grid_market(pts, [1.0, 1.0], [0.5, 0.5], [0.5, 0.0], [1, 1], [1, -1])


def test_repeated_returns_are_opt_in():
    with pytest.raises(errors.DuplicateOutcome):
        wk.build_discrete_market([2, -1, -1], [0.4, 0.3, 0.3])
    mk = wk.build_discrete_market([2, -1, -1], [0.4, 0.3, 0.3], repeated_returns=True)
    assert mk.validate()["duplicate_outcomes"] == 0
    assert wk.market_from_dict(mk.to_dict()).repeated_returns
