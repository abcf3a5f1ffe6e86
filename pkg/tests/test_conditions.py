import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import weighted_kelly as wk
from weighted_kelly import errors, functions
from weighted_kelly.quadrature import GridSpec


def market(E, p=None, phi=None, b=None):
    m = len(E)
    return wk.build_discrete_market(E, p or [1.0 / m] * m, phi, b)


@pytest.mark.parametrize("E, phi, expected", [
    ([1, -1], [1, 1], 0.0),
    ([1, -2], [2, 1], 0.0),
    ([2, -1], [1, 1], 0.5),
])
def test_orthogonality_examples(E, phi, expected):
    assert wk.check_orthogonality(market(E, phi=phi, b=[0.5, 0.5])) == expected


@pytest.mark.parametrize("phi, p, lhs, rhs, passed", [
    ([1, 1], [0.6, 0.4], 1.0, 1.0, True),
    ([2, 1], [0.7, 0.3], 1.5, 1.7, True),
    ([2, 1], [0.3, 0.7], 1.5, 1.3, False),
])
def test_reference_mass_examples(phi, p, lhs, rhs, passed):
    mk = market([1, -2], p, phi, [0.5, 0.5])
    got = wk.check_reference_mass(mk)
    assert got == pytest.approx((lhs, rhs), abs=1e-15)
    assert wk.check_conditions(mk).mass_passed is passed


def test_feasibility_examples(binary, ternary, skewed):
    res = wk.martingale_feasibility(binary)
    assert res.feasible and res.D == pytest.approx(0.2, abs=1e-15)
    res = wk.martingale_feasibility(ternary)
    assert res.feasible and res.D == pytest.approx(0.1, abs=1e-12)
    res = wk.martingale_feasibility(skewed)
    assert not res.feasible and res.D is None
    assert res.per_outcome_D == pytest.approx([0.4, 0.2], abs=1e-15)
    assert res.max_spread == pytest.approx(0.2, abs=1e-15)


def test_feasibility_rejects_out_of_range():
    # both candidates equal 2.0 > 1
    mk = wk.build_discrete_market([0.1, -0.1], [0.6, 0.4])
    res = wk.martingale_feasibility(mk)
    assert not res.feasible and "outside" in res.reason


def test_zero_return_outcomes():
    ok = wk.build_discrete_market([1.0, 0.0, -1.0], [0.4, 1 / 3, 1 - 0.4 - 1 / 3])
    res = wk.martingale_feasibility(ok)
    assert res.excluded == [1] and res.per_outcome_D[1] is None
    bad = wk.build_discrete_market([1.0, 0.0, -1.0], [0.4, 0.3, 0.3])
    with pytest.raises(errors.ZeroReturnOutcome):
        wk.martingale_feasibility(bad)


def test_uniform_reference_with_unit_weights_has_unit_mass():
    for m in range(2, 7):
        p = np.random.default_rng(m).dirichlet(np.ones(m))
        mk = wk.build_discrete_market(np.arange(m) - 1.5, p)
        assert wk.check_reference_mass(mk)[0] == pytest.approx(1.0, abs=1e-15)
        assert wk.check_reference_mass(mk)[1] == pytest.approx(1.0, abs=1e-15)


def _feasible_market(rng, m):
    E = rng.normal(size=m)
    E -= E.mean()
    D = rng.uniform(0, min(1.0, 0.9 / -E.min()))
    p = (1 + D * E) / m
    p[-1] = 1.0 - p[:-1].sum()
    return wk.build_discrete_market(E, p), D


def test_feasible_market_reconstructs_probabilities():
    rng = np.random.default_rng(0)
    for _ in range(100):
        mk, D = _feasible_market(rng, int(rng.integers(2, 7)))
        res = wk.martingale_feasibility(mk)
        assert res.feasible
        assert res.D == pytest.approx(D, abs=1e-9)
        np.testing.assert_allclose((1 + res.D * mk.outcomes) / mk.m, mk.probs, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_feasibility_invariant_to_reference_scale(seed, c):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    E = rng.normal(size=m)
    p = rng.dirichlet(np.ones(m))
    b = rng.uniform(0.1, 1.0, size=m)
    base = wk.martingale_feasibility(wk.build_discrete_market(E, p, None, b))
    scaled = wk.martingale_feasibility(wk.build_discrete_market(E, p, None, c * b))
    assert base.to_dict() == scaled.to_dict()


def test_use_reference_candidates():
    mk = wk.build_discrete_market([1.0, -1.0], [0.6, 0.4], None, [0.4, 0.6])
    res = wk.martingale_feasibility(mk, use_reference=True)
    np.testing.assert_allclose(res.per_outcome_D, [0.5, 1 / 3])


# ---- Gaussian construction and grid feasibility

def test_constructed_return_values():
    g = wk.construct_return_gaussian(1.0, 2.0, 0.5)
    assert g(np.array([0.0])) == pytest.approx(2 * (np.sqrt(2) - 1), abs=1e-15)
    x = np.array([[-3.0], [0.0], [3.0]])
    growth = 1 + 0.5 * g(x)
    np.testing.assert_allclose(growth, np.sqrt(2) * np.exp(-x[:, 0] ** 2 / 4), rtol=1e-14)
    assert np.all(growth > 0)


def test_constructed_return_near_equal_covariances_vanishes():
    g = wk.construct_return_gaussian(1.0, 1.0 + 1e-12, 0.5)
    assert np.max(np.abs(g(np.linspace(-5, 5, 11)[:, None]))) < 1e-10


@pytest.mark.parametrize("D", [0.0, 1.0, -0.1, 1.5])
def test_constructed_return_needs_open_interval(D):
    with pytest.raises(errors.DOutOfRange):
        wk.construct_return_gaussian(1.0, 2.0, D)


def test_grid_feasibility_recovers_D(gauss_market):
    grid = wk.discretize_gaussian_market(gauss_market)
    res = wk.martingale_feasibility_grid(grid)
    assert res.feasible
    assert abs(res.D - 0.5) <= 1e-6


def test_grid_feasibility_f_equals_b():
    pts = np.linspace(-1, 1, 5)
    f = np.full(5, 0.2)
    grid = wk.build_grid_market(pts, np.ones(5), f, f, np.ones(5), pts ** 3 + 0.1)
    res = wk.martingale_feasibility_grid(grid)
    assert res.feasible and res.D == 0.0


def test_grid_feasibility_linear_return_infeasible():
    gm = wk.build_gaussian_market(1, [[1.0]], [[2.0]], None, functions.LinearReturn([1.0]))
    res = wk.martingale_feasibility(gm)
    assert not res.feasible and res.max_spread > 1.0


def test_grid_all_returns_zero():
    pts = np.linspace(-1, 1, 4)
    grid = wk.build_grid_market(pts, np.ones(4), np.full(4, 0.25), np.full(4, 0.25), np.ones(4), np.zeros(4))
    with pytest.raises(errors.AllReturnsNearZero):
        wk.martingale_feasibility_grid(grid)


def test_constructed_return_is_orthogonal(gauss_market):
    assert abs(wk.check_orthogonality(gauss_market)) <= 1e-10
    d2 = wk.construct_return_gaussian(np.eye(2), [[2.0, 0.3], [0.3, 1.5]], 0.3)
    m2 = wk.build_gaussian_market(2, np.eye(2), [[2.0, 0.3], [0.3, 1.5]], None, d2)
    assert abs(wk.check_orthogonality(m2)) <= 1e-10
    assert wk.martingale_feasibility(m2).D == pytest.approx(0.3, abs=1e-6)


def test_gaussian_condition_report_flags_kernel_disagreement(gauss_market):
    rep = wk.check_conditions(gauss_market)
    assert rep.orthogonality_passed and rep.mass_passed
    assert rep.mass_lhs == pytest.approx(1.0, abs=1e-10)
    assert rep.mass_rhs == pytest.approx(1.0, abs=1e-10)
    # product-kernel variant does not vanish for this market
    assert rep.joint_kernel_passed is False
    assert abs(rep.joint_kernel_residual) > 0.1


def test_joint_kernel_residual_against_closed_form(gauss_market):
    # phi = 1, g = 2(sqrt2 e^{-x^2/4} - 1), kernel e^{-3x^2/4}:
    # 2 sqrt2 * sqrt(2 pi / 2) - 2 * sqrt(2 pi / 1.5)
    expect = 2 * np.sqrt(2) * np.sqrt(np.pi) - 2 * np.sqrt(2 * np.pi / 1.5)
    rep = wk.check_conditions(gauss_market)
    assert rep.joint_kernel_residual == pytest.approx(expect, abs=1e-10)


def test_reference_mass_normalization_flag():
    mk = wk.build_discrete_market([1, -1], [0.6, 0.4], None, [0.3, 0.3])
    rep = wk.check_conditions(mk)
    assert rep.reference_mass == pytest.approx(0.6) and not rep.reference_normalized


def test_reports_serialize(binary, gauss_market):
    assert wk.check_conditions(binary).to_dict()["passed"] is True
    d = wk.martingale_feasibility(gauss_market).to_dict()
    assert "per_outcome_D" not in d and d["feasible"]
