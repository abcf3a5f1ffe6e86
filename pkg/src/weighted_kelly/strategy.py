"""Previsible betting strategies.

A strategy maps ``(history, wealth)`` to a stake ``C_n >= 0``, where
``history`` holds only the outcomes of trials ``1 .. n-1``: indices into
``market.outcomes`` for finite markets, outcome vectors for Gaussian ones.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .conditions import martingale_feasibility
from .errors import DOutOfRange, NegativeStake, NoMartingaleStrategy, SchemaError
from .market import DiscreteMarket, GaussianMarket, GridMarket


@dataclass(frozen=True, eq=False)
class Strategy:
    kind: str
    fraction: Optional[float] = None
    table: dict = field(default_factory=dict)
    default: float = 0.0
    rule: Optional[Callable] = field(default=None, repr=False)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant_fraction"

    def raw_stake(self, history, wealth):
        if self.kind == "constant_fraction":
            return self.fraction * wealth
        if self.kind == "table":
            key = tuple(int(i) for i in history)
            return self.table.get(key, self.default) * wealth
        return float(self.rule(tuple(history), wealth))

    def to_dict(self):
        if self.kind == "constant_fraction":
            return {"kind": "constant_fraction", "D": self.fraction}
        if self.kind == "table":
            stakes = [{"history": list(k), "fraction": v} for k, v in sorted(self.table.items())]
            return {"kind": "table", "stakes": stakes, "default": self.default}
        raise SchemaError("custom strategies cannot be serialised")


@dataclass(frozen=True)
class StakeDecision:
    amount: float
    exceeds_wealth: bool
    deposit_violation: bool


def constant_fraction(D, allow_leverage=False) -> Strategy:
    """Stake ``C_n = D * Z_{n-1}`` on every trial.

    ``D`` must lie in ``[0, 1]``; ``allow_leverage`` lifts the upper bound for
    supermartingale experiments, which only need ``D >= 0``.
    """
    D = float(D)
    if not np.isfinite(D) or D < 0.0 or (D > 1.0 and not allow_leverage):
        raise DOutOfRange(f"fraction D={D} outside [0, 1]")
    return Strategy("constant_fraction", fraction=D)


def table_strategy(stakes, default=0.0) -> Strategy:
    """Fraction-of-wealth lookup keyed by history prefix (tuples of outcome indices)."""
    if isinstance(stakes, dict):
        table = {tuple(int(i) for i in k): float(v) for k, v in stakes.items()}
    else:
        table = {tuple(int(i) for i in e["history"]): float(e["fraction"]) for e in stakes}
    if any(v < 0 for v in table.values()) or default < 0:
        raise NegativeStake("table fractions must be non-negative")
    return Strategy("table", table=table, default=float(default))


def custom(rule) -> Strategy:
    """Wrap ``rule(history, wealth) -> stake``. The rule must be pure."""
    return Strategy("custom", rule=rule)


def strategy_from_dict(data) -> Strategy:
    kind = data.get("kind")
    if kind == "constant_fraction":
        return constant_fraction(data["D"], allow_leverage=bool(data.get("allow_leverage", False)))
    if kind == "table":
        return table_strategy(data["stakes"], data.get("default", 0.0))
    raise SchemaError(f"unknown strategy kind {kind!r}")


def support_returns(market) -> np.ndarray:
    """Return values over the outcome support (grid nodes for Gaussian markets)."""
    if isinstance(market, DiscreteMarket):
        return market.outcomes
    if isinstance(market, GridMarket):
        return market.returns[market.density > 0]
    if isinstance(market, GaussianMarket):
        from .quadrature import discretize_gaussian_market

        grid = discretize_gaussian_market(market)
        return grid.returns[grid.density > 0]
    raise TypeError(f"unsupported market {type(market).__name__}")


def stake(strategy: Strategy, history, wealth, market=None) -> StakeDecision:
    """Evaluate the stake and flag, without clamping, any constraint it breaks.

    ``exceeds_wealth`` marks ``C > Z``. ``deposit_violation`` marks an outcome
    in the market's support with ``1 + C g / Z <= 0``, i.e. a loss that would
    wipe out the current wealth; it is only computed when ``market`` is given.
    """
    if not wealth > 0:
        raise ValueError(f"wealth must be positive, got {wealth}")
    amount = strategy.raw_stake(history, wealth)
    if amount < 0:
        raise NegativeStake(f"strategy returned stake {amount} < 0")
    deposit = False
    if market is not None:
        deposit = bool(np.any(1.0 + amount * support_returns(market) / wealth <= 0.0))
    return StakeDecision(float(amount), bool(amount > wealth), deposit)


def optimal_strategy(market, grid_spec=None) -> Strategy:
    """The constant-fraction martingale strategy, if the market admits one."""
    result = martingale_feasibility(market, grid_spec=grid_spec)
    if not result.feasible:
        raise NoMartingaleStrategy(f"no martingale strategy: {result.reason}")
    return constant_fraction(result.D)
