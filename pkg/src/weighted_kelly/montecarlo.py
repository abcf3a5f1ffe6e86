"""Seeded Monte Carlo of the weighted growth rate.

Path ``k`` of a run with seed ``s`` draws its randomness from the counter
hash keyed by ``(s, k)``, so paths can be split across any number of worker
threads without changing a single draw. Per-path results are assembled in
path order and reduced with ``math.fsum``, which is exactly rounded and
therefore independent of how the work was partitioned.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from . import _accel, kernels
from .engine import alpha_for
from .errors import NegativeStake, RuinViolation
from .market import DiscreteMarket, GaussianMarket, GridMarket

CHUNK = 1 << 16
DUMP_ROW_LIMIT = 1_000_000
Z_SCORE_LIMIT = 4.0


@dataclass
class SimulationReport:
    paths: int
    n: int
    mean_S_n: float
    std_error: float
    alpha: float
    alpha_times_n: float
    z_score: Optional[float]
    seed: int
    ruin_count: int

    def to_dict(self):
        return asdict(self)


@dataclass
class StepDrift:
    step: int
    mean: float
    std_error: float
    z_score: Optional[float]


@dataclass
class DriftReport:
    paths: int
    n: int
    seed: int
    alpha: float
    steps: List[StepDrift]

    @property
    def max_abs_z(self) -> float:
        zs = [abs(s.z_score) for s in self.steps if s.z_score is not None]
        return max(zs) if zs else 0.0

    @property
    def martingale_consistent(self) -> bool:
        """Every step's mean drift lies within four standard errors of zero."""
        return self.max_abs_z <= Z_SCORE_LIMIT

    @property
    def supermartingale_consistent(self) -> bool:
        """No step's mean drift exceeds zero by more than four standard errors."""
        return all(s.mean <= Z_SCORE_LIMIT * s.std_error for s in self.steps)

    def to_dict(self):
        out = asdict(self)
        out["max_abs_z"] = self.max_abs_z
        out["martingale_consistent"] = self.martingale_consistent
        out["supermartingale_consistent"] = self.supermartingale_consistent
        return out


@dataclass
class _Chunk:
    S: np.ndarray             # S_n per path
    ruined: np.ndarray        # bool per path
    incs: Optional[np.ndarray] = None     # (count, n) weighted log increments
    factors: Optional[np.ndarray] = None  # (count, n) wealth factors


def _finite_arrays(market):
    if isinstance(market, DiscreteMarket):
        return market.probs, market.outcomes, market.weights
    return market.qweights * market.density, market.returns, market.weights


def _cdf(probs):
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return cdf


def _sequential_rowsum(mat):
    out = np.zeros(mat.shape[0])
    for j in range(mat.shape[1]):
        out += mat[:, j]
    return out


def _draw(market, n, key, start, count):
    """Outcome indices (finite markets) or points ``(count, n, d)`` (Gaussian)."""
    if isinstance(market, GaussianMarket):
        z = kernels.standard_normals(n, market.dim, key, start, count)
        return z @ market.chol.T
    probs, _, _ = _finite_arrays(market)
    return kernels.discrete_indices(_cdf(probs), n, key, start, count)


def _phi_g(market, draws):
    if isinstance(market, GaussianMarket):
        count, n, d = draws.shape
        flat = draws.reshape(-1, d)
        return (market.weight_fn(flat).reshape(count, n), market.return_fn(flat).reshape(count, n))
    _, returns, weights = _finite_arrays(market)
    return weights[draws], returns[draws]


def _constant_chunk(market, D, n, key, start, count, keep):
    draws = _draw(market, n, key, start, count)
    phi, g = _phi_g(market, draws)
    factors = 1.0 + D * g
    ruined = np.any(factors <= 0, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        incs = phi * np.log1p(D * g)
    incs[ruined] = 0.0
    S = _sequential_rowsum(incs)
    return _Chunk(S, ruined, incs if keep else None, factors if keep else None)


def _generic_chunk(market, strategy, n, key, start, count, Z_0, keep):
    draws = _draw(market, n, key, start, count)
    phi, g = _phi_g(market, draws)
    S = np.zeros(count)
    ruined = np.zeros(count, dtype=bool)
    incs = np.zeros((count, n))
    factors = np.ones((count, n))
    for k in range(count):
        Z = Z_0
        history = []
        s = 0.0
        for j in range(n):
            C = strategy.raw_stake(history, Z)
            if C < 0:
                raise NegativeStake(f"strategy returned stake {C} < 0 on path {start + k}")
            factor = 1.0 + C * g[k, j] / Z
            if not factor > 0:
                ruined[k] = True
                break
            Z_next = Z + C * g[k, j]
            inc = phi[k, j] * math.log(Z_next / Z) if phi[k, j] != 0 else 0.0
            s += inc
            incs[k, j] = inc
            factors[k, j] = factor
            Z = Z_next
            history.append(draws[k, j] if draws.ndim == 3 else int(draws[k, j]))
        S[k] = 0.0 if ruined[k] else s
    return _Chunk(S, ruined, incs if keep else None, factors if keep else None)


def _run(market, strategy, n, paths, seed, Z_0, threads, keep):
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not isinstance(market, (DiscreteMarket, GridMarket, GaussianMarket)):
        raise TypeError(f"unsupported market {type(market).__name__}")
    key = kernels.run_key(seed)
    bounds = [(s, min(CHUNK, paths - s)) for s in range(0, paths, CHUNK)]
    if strategy.is_constant:
        def job(b):
            return _constant_chunk(market, strategy.fraction, n, key, b[0], b[1], keep)
    else:
        def job(b):
            return _generic_chunk(market, strategy, n, key, b[0], b[1], Z_0, keep)
    workers = min(_accel.thread_count(threads), len(bounds))
    if workers == 1:
        chunks = [job(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, bounds))
    return chunks


def _mean_se(values):
    N = values.size
    if N == 0:
        return float("nan"), float("nan")
    mean = math.fsum(values) / N
    if N < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (N - 1)
    return mean, math.sqrt(var / N)


def _z(mean, target, se):
    if se > 0:
        return (mean - target) / se
    return 0.0 if mean == target else None


def simulate(market, strategy, n, paths, seed, Z_0=1.0, threads=None, skip_ruin=False,
             alpha=None) -> SimulationReport:
    """Mean and standard error of ``S_n`` over ``paths`` seeded trajectories.

    Ruined paths (some wealth factor ``<= 0``) raise :class:`RuinViolation`
    unless ``skip_ruin`` is set, in which case they are counted and dropped.
    """
    chunks = _run(market, strategy, n, paths, seed, Z_0, threads, keep=False)
    S = np.concatenate([c.S for c in chunks])
    ruined = np.concatenate([c.ruined for c in chunks])
    ruin_count = int(ruined.sum())
    if ruin_count and not skip_ruin:
        first = int(np.flatnonzero(ruined)[0])
        raise RuinViolation(f"{ruin_count} of {paths} paths ruined (first: path {first})")
    a = alpha_for(market).value if alpha is None else float(alpha)
    mean, se = _mean_se(S[~ruined])
    return SimulationReport(paths, n, mean, se, a, n * a, _z(mean, n * a, se), int(seed), ruin_count)


def drift_test(market, strategy, n, paths, seed, Z_0=1.0, threads=None, alpha=None) -> DriftReport:
    """Per-step mean of ``phi * ln(Z_j / Z_{j-1}) - alpha`` with standard errors."""
    chunks = _run(market, strategy, n, paths, seed, Z_0, threads, keep=True)
    ruined = np.concatenate([c.ruined for c in chunks])
    if ruined.any():
        raise RuinViolation(f"{int(ruined.sum())} of {paths} paths ruined")
    incs = np.concatenate([c.incs for c in chunks])
    a = alpha_for(market).value if alpha is None else float(alpha)
    steps = []
    for j in range(n):
        mean, se = _mean_se(incs[:, j] - a)
        steps.append(StepDrift(j + 1, mean, se, _z(mean, 0.0, se)))
    return DriftReport(paths, n, int(seed), a, steps)


def path_dump_csv(market, strategy, n, paths, seed, Z_0=1.0, threads=None, max_rows=DUMP_ROW_LIMIT) -> str:
    """Per-path CSV with columns path, step, Z, S (step 0 included)."""
    rows = paths * (n + 1)
    if rows > max_rows:
        raise ValueError(f"path dump would have {rows} rows (limit {max_rows})")
    chunks = _run(market, strategy, n, paths, seed, Z_0, threads, keep=True)
    incs = np.concatenate([c.incs for c in chunks])
    factors = np.concatenate([c.factors for c in chunks])
    ruined = np.concatenate([c.ruined for c in chunks])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path", "step", "Z", "S"])
    for k in range(paths):
        Z = float(Z_0)
        S = 0.0
        writer.writerow([k, 0, repr(Z), repr(S)])
        if ruined[k]:
            continue
        for j in range(n):
            Z = Z * float(factors[k, j])
            S = S + float(incs[k, j])
            writer.writerow([k, j + 1, repr(Z), repr(S)])
    return buf.getvalue()


def sample_gaussian(market: GaussianMarket, count, seed, threads=None):
    """``count`` draws from ``N(0, sigma)`` using the same streams as :func:`simulate` (step 1)."""
    key = kernels.run_key(seed)
    bounds = [(s, min(CHUNK, count - s)) for s in range(0, count, CHUNK)]
    parts = [kernels.standard_normals(1, market.dim, key, s, c)[:, 0, :] for s, c in bounds]
    return np.concatenate(parts) @ market.chol.T
