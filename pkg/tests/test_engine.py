import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import stats

import weighted_kelly as wk
from weighted_kelly import errors, functions
from weighted_kelly.engine import (alpha_discrete, alpha_gaussian, alpha_gaussian_closed_form,
                                   alpha_general, rate_increment, run_trajectory, wealth_step)

ALPHA_BINARY = 0.6 * math.log(1.2) + 0.4 * math.log(0.8)
KL_1D = 0.5 * (math.log(2.0) - 0.5)


@pytest.mark.parametrize("Z, C, g, expected", [(100.0, 20.0, 1.0, 120.0), (100.0, 20.0, -1.0, 80.0)])
def test_wealth_step(Z, C, g, expected):
    assert wealth_step(Z, C, g) == expected


def test_wealth_step_ruin():
    with pytest.raises(errors.RuinViolation):
        wealth_step(100.0, 100.0, -1.0)


def test_rate_increment_examples():
    assert rate_increment(1.0, 120.0, 100.0) == pytest.approx(0.182322, abs=1e-6)
    assert rate_increment(0.0, 3.0, 7.0) == 0.0
    assert rate_increment(2.0, 80.0, 100.0) == pytest.approx(-0.446287, abs=1e-6)
    with pytest.raises(ValueError):
        rate_increment(-1.0, 1.0, 1.0)


def test_alpha_discrete_examples(binary, ternary):
    assert alpha_discrete(binary).value == pytest.approx(0.0201355, abs=1e-7)
    assert alpha_discrete(binary).value == pytest.approx(ALPHA_BINARY, abs=1e-16)
    for m in (2, 3, 5):
        mk = wk.build_discrete_market(np.arange(m, dtype=float), [1.0 / m] * m)
        assert alpha_discrete(mk).value == 0.0
    assert alpha_discrete(ternary).value == pytest.approx(0.0097123, abs=1e-7)


def test_alpha_discrete_general_reference():
    mk = wk.build_discrete_market([1, -1], [0.6, 0.4], [2.0, 1.0], [0.3, 0.9])
    expect = 2 * 0.6 * math.log(0.6 / 0.3) + 0.4 * math.log(0.4 / 0.9)
    assert alpha_discrete(mk).value == pytest.approx(expect, abs=1e-15)


def test_alpha_is_kl_for_unit_weights():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m = int(rng.integers(2, 8))
        p = rng.dirichlet(np.ones(m))
        mk = wk.build_discrete_market(np.arange(m) - 0.5, p)
        value = alpha_discrete(mk).value
        assert value >= -1e-15
        assert value == pytest.approx(float(stats.entropy(p, np.full(m, 1.0 / m))), abs=1e-13)


def test_alpha_general_examples(gauss_market):
    pts = np.linspace(-1, 1, 4)
    f = np.full(4, 0.25)
    grid = wk.build_grid_market(pts, np.ones(4), f, f, np.ones(4), pts)
    assert alpha_general(grid).value == 0.0
    res = alpha_general(wk.discretize_gaussian_market(gauss_market))
    assert res.value == pytest.approx(KL_1D, abs=1e-10) and res.method == "quadrature"


def _kl_integrand(x, phi):
    # ln(f/b) for N(0,1) against N(0,2), written out to avoid 0/0 in the tails
    return phi(x) * stats.norm.pdf(x) * (0.5 * math.log(2.0) - x * x / 4)


def test_alpha_indicator_weight_against_scipy():
    half = sp_integrate.quad(_kl_integrand, 0, np.inf, args=(lambda x: 1.0,), epsabs=1e-14)[0]
    assert half == pytest.approx(0.0482868, abs=1e-7)
    box = functions.BoxWeight([0.0], [None])
    g = wk.construct_return_gaussian(1.0, 2.0, 0.5)
    mk = wk.build_gaussian_market(1, [[1.0]], [[2.0]], box, g)
    assert alpha_gaussian(mk).value == pytest.approx(half, abs=1e-10)
    assert alpha_general(wk.discretize_gaussian_market(mk)).value == pytest.approx(half, abs=1e-10)


def test_alpha_polynomial_weight_against_scipy():
    phi = functions.weight_from_spec({"kind": "polynomial", "coeffs": [1.0, 0.0, 0.5]}, 1)
    mk = wk.build_gaussian_market(1, [[1.0]], [[2.0]], phi, wk.construct_return_gaussian(1.0, 2.0, 0.5))
    oracle = sp_integrate.quad(_kl_integrand, -np.inf, np.inf, args=(lambda x: 1 + 0.5 * x * x,),
                               epsabs=1e-14)[0]
    assert alpha_gaussian(mk).value == pytest.approx(oracle, abs=1e-10)


def test_alpha_gaussian_closed_form_examples():
    assert alpha_gaussian_closed_form(1.0, 2.0) == pytest.approx(0.0965736, abs=1e-7)
    assert alpha_gaussian_closed_form(np.eye(2), 2 * np.eye(2)) == pytest.approx(0.1931472, abs=1e-7)
    assert alpha_gaussian_closed_form(np.eye(3), np.eye(3)) == 0.0


def test_alpha_gaussian_quadrature_matches_closed_form():
    sigma = np.array([[1.0, 0.3], [0.3, 0.8]])
    sigma0 = np.array([[2.0, -0.2], [-0.2, 1.5]])
    mk = wk.build_gaussian_market(2, sigma, sigma0, None, functions.LinearReturn([1.0, 0.0]))
    closed = alpha_gaussian(mk, method="closed-form").value
    quad = alpha_gaussian(mk, method="quadrature")
    assert quad.value == pytest.approx(closed, abs=1e-10)
    assert quad.error_estimate >= 0


def test_alpha_gaussian_refinement_converges(gauss_market):
    errs = []
    for K in (8, 16, 32, 64):
        grid = wk.discretize_gaussian_market(gauss_market, wk.GridSpec(K=K), tol=1.0)
        value = float(np.sum(grid.qweights * grid.weights * grid.density * np.log(grid.density / grid.reference)))
        errs.append(abs(value - KL_1D))
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-10


def test_trajectory_examples(binary):
    s = wk.constant_fraction(0.2)
    tr = run_trajectory(binary, s, 2, [0, 1], 1.0)
    np.testing.assert_allclose(tr.wealth, [1.0, 1.2, 0.96], rtol=1e-15)
    assert tr.rate[-1] == pytest.approx(-0.040822, abs=1e-6)
    tr = run_trajectory(binary, s, 2, [0, 0], 1.0)
    assert tr.excess()[-1] == pytest.approx(0.324372, abs=1e-6)
    tr = run_trajectory(binary, wk.constant_fraction(0.0), 4, [0, 1, 1, 0], 5.0)
    assert np.all(tr.wealth == 5.0) and np.all(tr.rate == 0.0)
    np.testing.assert_allclose(tr.excess(), -np.arange(1, 5) * ALPHA_BINARY, rtol=1e-15)


def test_trajectory_compensator_increments(binary):
    tr = run_trajectory(binary, wk.constant_fraction(0.3), 6, [0, 1, 0, 0, 1, 1])
    np.testing.assert_allclose(np.diff(np.r_[0.0, tr.compensator]), ALPHA_BINARY, rtol=1e-14)


def test_trajectory_ruin_reports_step(binary):
    with pytest.raises(errors.RuinViolation) as info:
        run_trajectory(binary, wk.constant_fraction(1.0), 3, [0, 1, 0])
    assert info.value.step == 2 and list(info.value.prefix) == [0, 1]


def test_trajectory_gaussian_points(gauss_market):
    pts = [[0.0], [1.0], [-2.5]]
    tr = run_trajectory(gauss_market, wk.constant_fraction(0.5), 3, pts)
    expect = math.log(2.0) * 1.5 - (0 + 1.0 + 6.25) / 4
    assert tr.rate[-1] == pytest.approx(expect, abs=1e-14)


def test_telescoping_random_strategies():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = int(rng.integers(2, 5))
        E = np.sort(rng.uniform(-1, 2, m))
        mk = wk.build_discrete_market(E, rng.dirichlet(np.ones(m)))
        cap = 0.95 / max(1e-9, -E.min()) if E.min() < 0 else 3.0
        fractions = rng.uniform(0, cap, 20)
        s = wk.custom(lambda h, z, fr=fractions: fr[len(h)] * z)
        n = int(rng.integers(1, 20))
        tr = run_trajectory(mk, s, n, list(rng.integers(0, m, n)), rng.uniform(0.01, 100))
        assert abs(tr.rate[-1] - math.log(tr.wealth[-1] / tr.wealth[0])) <= 1e-12


def test_rate_independent_of_initial_wealth(binary):
    seq = [0, 1, 1, 0, 0, 0, 1, 0]
    rates = [run_trajectory(binary, wk.constant_fraction(0.35), 8, seq, z).rate for z in (0.01, 1.0, 1000.0)]
    for r in rates[1:]:
        np.testing.assert_allclose(r, rates[0], rtol=0, atol=1e-12)


def test_one_step_martingale_identity():
    rng = np.random.default_rng(9)
    for _ in range(100):
        m = int(rng.integers(2, 6))
        E = rng.normal(size=m)
        E -= E.mean()
        D = rng.uniform(0, min(1.0, 0.9 / -E.min()))
        p = (1 + D * E) / m
        p[-1] = 1 - p[:-1].sum()
        mk = wk.build_discrete_market(E, p)
        D_star = wk.martingale_feasibility(mk).D
        lhs = float(np.sum(mk.probs * mk.weights * np.log1p(D_star * mk.outcomes)))
        assert lhs == pytest.approx(alpha_discrete(mk).value, abs=1e-12)


def test_trajectory_csv(binary):
    text = run_trajectory(binary, wk.constant_fraction(0.2), 2, [0, 1]).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "step,outcome,Z,S,A,S_minus_A"
    assert len(lines) == 4 and lines[1].startswith("0,,1.0")
