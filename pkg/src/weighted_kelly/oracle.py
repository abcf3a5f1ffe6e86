"""Exact expectations over every outcome sequence of a finite market.

``exact_expected_rate`` sums ``P(sequence) * S_n(sequence)`` over all
``m**n`` sequences in lexicographic order (first trial most significant).
Constant-fraction strategies go through the compiled enumeration kernel;
any other strategy, or a request for per-node drifts, uses a depth-first
tree walk so history-dependent stakes are honoured.
"""

import csv
import io
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import kernels
from .engine import alpha_for, rate_increment, wealth_step
from .errors import EnumerationTooLarge, NegativeStake, RuinViolation
from .market import DiscreteMarket, GridMarket
from .strategy import Strategy, constant_fraction

DEFAULT_CAP = 1 << 24


@dataclass
class ExactResult:
    expected_rate: float
    n: int
    sequences_enumerated: int
    supermartingale_gap: float
    alpha: float
    total_probability: float
    method: str
    per_node_drifts: Optional[dict] = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepPoint:
    D: float
    expected_rate: float
    gap: float


def _finite_view(market):
    """``(probs, returns, weights)`` of a finite market."""
    if isinstance(market, DiscreteMarket):
        return market.probs, market.outcomes, market.weights
    if isinstance(market, GridMarket):
        return market.qweights * market.density, market.returns, market.weights
    raise TypeError("exact enumeration needs a finite (discrete or grid) market")


def _check_size(m, n, cap):
    count = m ** n
    if count > cap:
        raise EnumerationTooLarge(f"{m}**{n} = {count} sequences exceeds the cap of {cap}")
    return count


def _constant_increments(strategy, probs, returns, weights):
    factors = 1.0 + strategy.fraction * returns
    bad = np.flatnonzero((factors <= 0) & (probs > 0))
    if bad.size:
        i = int(bad[0])
        raise RuinViolation(f"fraction {strategy.fraction} ruins the bettor on outcome {i}", step=1, prefix=(i,))
    return weights * np.log1p(strategy.fraction * returns)


def exact_expected_rate(market, strategy: Strategy, n, Z_0=1.0, cap=DEFAULT_CAP,
                        per_node=False, alpha=None, backend=None) -> ExactResult:
    """Exact ``E[S_n]`` and the gap ``n * alpha - E[S_n]``.

    With ``per_node=True`` the conditional drift at every history prefix of
    length ``< n`` is returned as well, keyed by comma-joined outcome indices
    (the root is the empty string).
    """
    probs, returns, weights = _finite_view(market)
    m = probs.shape[0]
    count = _check_size(m, n, cap)
    a = alpha_for(market).value if alpha is None else float(alpha)
    drifts = None
    if strategy.is_constant and not per_node:
        incs = _constant_increments(strategy, probs, returns, weights)
        total, mass = kernels.enumerate_constant(probs, incs, n, backend=backend)
        method = "enumeration-kernel"
    else:
        walker = _TreeWalk(probs, returns, weights, strategy, n, a, per_node)
        walker.walk(Z_0)
        total, mass = walker.total, walker.mass
        drifts = walker.drifts
        method = "tree-walk"
    return ExactResult(total, n, count, n * a - total, a, mass, method, drifts)


class _TreeWalk:
    def __init__(self, probs, returns, weights, strategy, n, alpha, per_node):
        self.probs = probs
        self.returns = returns
        self.weights = weights
        self.strategy = strategy
        self.n = n
        self.alpha = alpha
        self.drifts = {} if per_node else None
        self.total = 0.0
        self.mass = 0.0

    def walk(self, Z_0):
        self._visit([], Z_0, None, 0.0)

    def _visit(self, history, Z, P, S):
        depth = len(history)
        if depth == self.n:
            self.total += P * S
            self.mass += P
            return
        C = self.strategy.raw_stake(history, Z)
        if C < 0:
            raise NegativeStake(f"strategy returned stake {C} < 0 after prefix {tuple(history)}")
        if self.drifts is not None:
            self.drifts[",".join(map(str, history))] = _drift(
                self.probs, self.returns, self.weights, C, Z, self.alpha, history)
        for i in range(self.probs.shape[0]):
            try:
                Z_next = wealth_step(Z, C, self.returns[i])
            except RuinViolation as exc:
                raise RuinViolation(str(exc), step=depth + 1, prefix=history + [i]) from None
            S_next = S + rate_increment(self.weights[i], Z_next, Z)
            # first factor taken as-is so products associate like the enumeration kernel
            P_next = self.probs[i] if P is None else P * self.probs[i]
            self._visit(history + [i], Z_next, P_next, S_next)


def _drift(probs, returns, weights, C, Z, alpha, history):
    total = 0.0
    for i in range(probs.shape[0]):
        factor = 1.0 + C * returns[i] / Z
        if not factor > 0:
            raise RuinViolation(f"stake {C} at wealth {Z} ruins on outcome {i}",
                                step=len(history) + 1, prefix=list(history) + [i])
        total += probs[i] * weights[i] * np.log(factor)
    return float(total - alpha)


def conditional_drift(market, strategy: Strategy, history_prefix, Z_0=1.0, alpha=None) -> float:
    """``E[(S_n - A_n) - (S_{n-1} - A_{n-1}) | history]`` at the node reached by ``history_prefix``."""
    probs, returns, weights = _finite_view(market)
    a = alpha_for(market).value if alpha is None else float(alpha)
    Z = Z_0
    history = []
    for i in history_prefix:
        C = strategy.raw_stake(history, Z)
        if C < 0:
            raise NegativeStake(f"strategy returned stake {C} < 0")
        try:
            Z = wealth_step(Z, C, returns[i])
        except RuinViolation as exc:
            raise RuinViolation(str(exc), step=len(history) + 1, prefix=history + [i]) from None
        history.append(int(i))
    C = strategy.raw_stake(history, Z)
    if C < 0:
        raise NegativeStake(f"strategy returned stake {C} < 0")
    return _drift(probs, returns, weights, C, Z, a, history)


def sweep_fraction(market, D_grid, n=1, Z_0=1.0, backend=None):
    """Exact ``E[S_n]`` for each constant fraction in ``D_grid``.

    Fractions above one are allowed (leveraged stakes) as long as no outcome
    ruins the bettor.
    """
    alpha = alpha_for(market).value
    points = []
    for D in D_grid:
        res = exact_expected_rate(market, constant_fraction(D, allow_leverage=True), n, Z_0,
                                  alpha=alpha, backend=backend)
        points.append(SweepPoint(float(D), res.expected_rate, res.supermartingale_gap))
    return points


def sweep_argmax(points):
    """The sweep point with the largest expected rate (first one on ties)."""
    return max(points, key=lambda p: p.expected_rate)


def sweep_to_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["D", "expected_rate", "gap"])
    for p in points:
        writer.writerow([repr(p.D), repr(p.expected_rate), repr(p.gap)])
    return buf.getvalue()
