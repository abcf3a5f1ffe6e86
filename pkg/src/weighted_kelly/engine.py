"""Wealth recursion, weighted growth rate, and the compensator alpha.

All logarithms are natural; rates are in nats.
"""

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NegativeStake, QuadratureNotConverged, RuinViolation
from .functions import is_constant_weight
from .market import DiscreteMarket, GaussianMarket, GridMarket
from .quadrature import GridSpec, discretize_gaussian_market, integrate
from .tolerances import TAU_QUAD


@dataclass(frozen=True)
class AlphaValue:
    value: float
    method: str  # "closed-form" | "quadrature" | "exact-sum" | "monte-carlo"
    error_estimate: float = 0.0

    def to_dict(self):
        return {"value": self.value, "method": self.method, "error_estimate": self.error_estimate}


@dataclass
class Trajectory:
    wealth: np.ndarray        # Z_0 .. Z_n
    rate: np.ndarray          # S_1 .. S_n
    compensator: np.ndarray   # A_1 .. A_n
    outcomes: list
    alpha: float

    @property
    def n(self) -> int:
        return len(self.rate)

    def excess(self) -> np.ndarray:
        """``S_j - A_j`` for ``j = 1 .. n``."""
        return self.rate - self.compensator

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "outcome", "Z", "S", "A", "S_minus_A"])
        writer.writerow([0, "", repr(float(self.wealth[0])), "0.0", "0.0", "0.0"])
        for j in range(self.n):
            out = self.outcomes[j]
            if np.ndim(out):
                out = ";".join(repr(float(v)) for v in np.ravel(out))
            writer.writerow([j + 1, out, repr(float(self.wealth[j + 1])), repr(float(self.rate[j])),
                             repr(float(self.compensator[j])), repr(float(self.rate[j] - self.compensator[j]))])
        return buf.getvalue()


def wealth_step(Z_prev, C, g_value):
    """One trial of ``Z_n = Z_{n-1} + C_n g(eps_n)``; the factor ``1 + C g / Z`` must stay positive."""
    if not Z_prev > 0:
        raise ValueError(f"wealth must be positive, got {Z_prev}")
    factor = 1.0 + C * g_value / Z_prev
    if not factor > 0:
        raise RuinViolation(f"wealth factor 1 + C*g/Z = {factor} is not positive")
    return Z_prev + C * g_value


def rate_increment(phi_value, Z_next, Z_prev):
    """Weighted log-return ``phi * ln(Z_next / Z_prev)``."""
    if not (Z_next > 0 and Z_prev > 0):
        raise ValueError("wealths must be positive")
    if phi_value < 0:
        raise ValueError(f"weight must be non-negative, got {phi_value}")
    if phi_value == 0:
        return 0.0
    return phi_value * math.log(Z_next / Z_prev)


def _xlogy_ratio(w, f, b):
    # terms with f == 0 contribute nothing (0 log 0 = 0)
    pos = f > 0
    return w[pos] * f[pos] * np.log(f[pos] / b[pos])


def alpha_discrete(market: DiscreteMarket) -> AlphaValue:
    """``sum phi_i p_i ln(p_i / b_i)``; with uniform reference this is ``sum phi_i p_i ln(m p_i)``."""
    p = market.probs
    if market.has_uniform_reference:
        logs = np.log(p * market.m)
    else:
        logs = np.log(p / market.reference)
    return AlphaValue(float(np.sum(market.weights * p * logs)), "exact-sum", 0.0)


def _grid_alpha(grid):
    return float(np.sum(_xlogy_ratio(grid.qweights * grid.weights, grid.density, grid.reference)))


def alpha_general(grid: GridMarket, tol=TAU_QUAD) -> AlphaValue:
    """Quadrature sum of ``phi f ln(f/b)`` over the grid.

    Grids produced by :func:`discretize_gaussian_market` are re-discretised at
    ``2K`` for the error estimate; a hand-built grid is a finite measure and
    its sum is exact.
    """
    value = _grid_alpha(grid)
    if grid.source is None:
        return AlphaValue(value, "exact-sum", 0.0)
    market, spec = grid.source
    fine = _grid_alpha(discretize_gaussian_market(market, spec.refined(), tol=max(tol, TAU_QUAD)))
    err = abs(fine - value)
    if err > tol:
        raise QuadratureNotConverged(f"alpha changed by {err:.3e} under refinement", value=fine, error_estimate=err)
    return AlphaValue(fine, "quadrature", err)


def alpha_gaussian_closed_form(sigma, sigma0, scale=1.0):
    """``scale/2 * (tr(S0^-1 S) - d + ln det(S0 S^-1))``: the Gaussian KL divergence times a constant weight."""
    sigma = np.atleast_2d(sigma)
    sigma0 = np.atleast_2d(sigma0)
    d = sigma.shape[0]
    tr = float(np.trace(np.linalg.solve(sigma0, sigma)))
    logdet = np.linalg.slogdet(sigma0)[1] - np.linalg.slogdet(sigma)[1]
    return float(0.5 * scale * (tr - d + logdet))


def alpha_gaussian(market: GaussianMarket, method="auto", grid_spec: Optional[GridSpec] = None,
                   tol=TAU_QUAD) -> AlphaValue:
    """Expected ``phi(x) * ln(f(x)/b(x))`` under ``x ~ N(0, sigma)``.

    ``method="auto"`` uses the closed form for constant weights and
    quadrature otherwise; ``"quadrature"`` and ``"closed-form"`` force one.
    """
    constant = is_constant_weight(market.weight_fn)
    if method == "closed-form" or (method == "auto" and constant):
        if not constant:
            raise ValueError("closed form requires a constant weight function")
        return AlphaValue(alpha_gaussian_closed_form(market.sigma, market.sigma0, market.weight_fn.value),
                          "closed-form", 0.0)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    quad = np.linalg.inv(market.sigma0) - np.linalg.inv(market.sigma)
    logdet = market.logdet0 - market.logdet

    def integrand(x):
        q = np.einsum("ni,ij,nj->n", x, quad, x)
        return market.weight_fn(x) * 0.5 * (q + logdet)

    res = integrate(integrand, market.sigma, grid_spec, tol=tol)
    return AlphaValue(res.value, "monte-carlo" if res.method == "monte-carlo" else "quadrature",
                      res.error_estimate)


def alpha_for(market) -> AlphaValue:
    if isinstance(market, DiscreteMarket):
        return alpha_discrete(market)
    if isinstance(market, GridMarket):
        return alpha_general(market)
    if isinstance(market, GaussianMarket):
        return alpha_gaussian(market)
    raise TypeError(f"unsupported market {type(market).__name__}")


def _outcome_values(market, outcome):
    """``(phi, g)`` for one outcome (an index, or a point for Gaussian markets)."""
    if isinstance(market, DiscreteMarket):
        return float(market.weights[outcome]), float(market.outcomes[outcome])
    if isinstance(market, GridMarket):
        return float(market.weights[outcome]), float(market.returns[outcome])
    x = np.asarray(outcome, dtype=float).reshape(1, -1)
    return float(market.weight_fn(x)[0]), float(market.return_fn(x)[0])


def run_trajectory(market, strategy, n, outcome_sequence, Z_0=1.0, alpha=None) -> Trajectory:
    """Replay ``outcome_sequence`` through the wealth recursion.

    Outcomes are indices for finite and grid markets and points for Gaussian
    markets. ``alpha`` defaults to the market's compensator increment.
    """
    if len(outcome_sequence) != n:
        raise ValueError(f"outcome sequence has length {len(outcome_sequence)}, expected {n}")
    if not Z_0 > 0:
        raise ValueError(f"initial wealth must be positive, got {Z_0}")
    a = alpha_for(market).value if alpha is None else float(alpha)
    wealth = np.empty(n + 1)
    rate = np.empty(n)
    wealth[0] = Z_0
    S = 0.0
    history = []
    for j in range(n):
        C = strategy.raw_stake(history, wealth[j])
        if C < 0:
            raise NegativeStake(f"strategy returned stake {C} < 0 at step {j + 1}")
        phi, g = _outcome_values(market, outcome_sequence[j])
        try:
            wealth[j + 1] = wealth_step(wealth[j], C, g)
        except RuinViolation as exc:
            raise RuinViolation(f"step {j + 1}: {exc}", step=j + 1,
                                prefix=_prefix(history + [outcome_sequence[j]])) from None
        S += rate_increment(phi, wealth[j + 1], wealth[j])
        rate[j] = S
        history.append(outcome_sequence[j])
    comp = a * np.arange(1, n + 1, dtype=float)
    return Trajectory(wealth, rate, comp, list(outcome_sequence), a)


def _prefix(history):
    return [h if np.ndim(h) == 0 else tuple(np.ravel(h)) for h in history]
