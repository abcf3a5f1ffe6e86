"""Market models: finite IID outcome markets, Gaussian markets, and grid markets.

All markets are frozen dataclasses holding read-only numpy arrays; build them
through the ``build_*`` functions, which validate every invariant.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import functions
from .errors import (
    CovariancesEqual,
    DimensionMismatch,
    DuplicateOutcome,
    InvalidM,
    NegativeWeight,
    NonPositiveProb,
    NonPositiveReference,
    NotPositiveDefinite,
    ProbSumError,
    SchemaError,
)
from .tolerances import TAU_COV, TAU_PROB, TAU_QUAD


def _frozen(values):
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMarket:
    outcomes: np.ndarray
    probs: np.ndarray
    weights: np.ndarray
    reference: np.ndarray
    # distinct outcomes may share a return value only when this is set
    repeated_returns: bool = False

    @property
    def m(self) -> int:
        return self.outcomes.shape[0]

    @property
    def kind(self) -> str:
        return "discrete"

    @property
    def has_uniform_reference(self) -> bool:
        return bool(np.all(self.reference == 1.0 / self.m))

    def returns(self) -> np.ndarray:
        return self.outcomes

    def validate(self) -> dict:
        """Residuals of every invariant; all are zero for a valid market."""
        return {
            "prob_sum": abs(float(self.probs.sum()) - 1.0),
            "non_positive_probs": int(np.sum(self.probs <= 0)),
            "negative_weights": int(np.sum(self.weights < 0)),
            "non_positive_reference": int(np.sum(self.reference <= 0)),
            "duplicate_outcomes": 0 if self.repeated_returns else int(self.m - np.unique(self.outcomes).size),
        }

    def to_dict(self) -> dict:
        out = {
            "type": "discrete",
            "outcomes": self.outcomes.tolist(),
            "probs": self.probs.tolist(),
            "weights": self.weights.tolist(),
            "reference": self.reference.tolist(),
        }
        if self.repeated_returns:
            out["repeated_returns"] = True
        return out


def uniform_reference(m):
    """Reference weights ``1/m`` for each of ``m`` outcomes."""
    if int(m) != m or m < 2:
        raise InvalidM(f"need at least two outcomes, got m={m}")
    return [1.0 / m] * int(m)


def build_discrete_market(outcomes, probs, weights=None, reference=None, repeated_returns=False):
    """Validate and freeze a finite-outcome market.

    ``weights`` defaults to one for every outcome and ``reference`` to the
    uniform ``1/m``. Inputs are stored in the given order, unmodified.

    Outcomes are identified by index. Their return values must be pairwise
    distinct unless ``repeated_returns`` is set, which allows two outcomes
    to pay the same multiplier (e.g. ``E = (2, -1, -1)``).
    """
    outcomes = np.asarray(outcomes, dtype=np.float64)
    m = outcomes.shape[0] if outcomes.ndim == 1 else 0
    if m < 2:
        raise InvalidM(f"need at least two outcomes, got {m}")
    probs = np.asarray(probs, dtype=np.float64)
    weights = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64)
    reference = np.asarray(uniform_reference(m) if reference is None else reference, dtype=np.float64)
    for name, arr in (("probs", probs), ("weights", weights), ("reference", reference)):
        if arr.shape != (m,):
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({m},)")
    for name, arr in (("outcomes", outcomes), ("probs", probs), ("weights", weights), ("reference", reference)):
        if not np.all(np.isfinite(arr)):
            raise SchemaError(f"{name} contains non-finite values")
    if np.any(probs <= 0):
        raise NonPositiveProb(f"probabilities must be positive: {probs.tolist()}")
    total = probs.sum()
    if abs(total - 1.0) > TAU_PROB:
        raise ProbSumError(f"probabilities sum to {total!r}, not 1")
    if np.any(weights < 0):
        raise NegativeWeight(f"weights must be non-negative: {weights.tolist()}")
    if np.any(reference <= 0):
        raise NonPositiveReference(f"reference weights must be positive: {reference.tolist()}")
    if not repeated_returns and np.unique(outcomes).size != m:
        raise DuplicateOutcome(f"outcomes must be pairwise distinct: {outcomes.tolist()}")
    return DiscreteMarket(_frozen(outcomes), _frozen(probs), _frozen(weights), _frozen(reference),
                          bool(repeated_returns))


def _log_gaussian(points, chol, logdet):
    d = chol.shape[0]
    z = np.linalg.solve(chol, points.T)
    return -0.5 * np.sum(z * z, axis=0) - 0.5 * (d * np.log(2.0 * np.pi) + logdet)


@dataclass(frozen=True, eq=False)
class GaussianMarket:
    """IID ``N(0, sigma)`` outcomes compared against the ``N(0, sigma0)`` reference."""

    dim: int
    sigma: np.ndarray
    sigma0: np.ndarray
    weight_fn: Callable
    return_fn: Callable
    chol: np.ndarray = field(repr=False)
    chol0: np.ndarray = field(repr=False)

    @property
    def kind(self) -> str:
        return "gaussian"

    @property
    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    @property
    def logdet0(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol0))))

    def density(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(_log_gaussian(pts, self.chol, self.logdet))

    def reference_density(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(_log_gaussian(pts, self.chol0, self.logdet0))

    def to_dict(self) -> dict:
        weight = getattr(self.weight_fn, "spec", None)
        ret = getattr(self.return_fn, "spec", None)
        if weight is None or ret is None:
            raise SchemaError("market uses custom callables and cannot be serialised")
        return {"type": "gaussian", "dim": self.dim, "sigma": self.sigma.tolist(),
                "sigma0": self.sigma0.tolist(), "weight": weight, "return": ret}


def _cholesky(mat, name):
    if not np.allclose(mat, mat.T, rtol=0.0, atol=TAU_COV):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc


def build_gaussian_market(dim, sigma, sigma0, weight_fn=None, return_fn=None):
    """Validate a Gaussian market and cache both Cholesky factors.

    ``weight_fn`` defaults to the constant one. Plain callables are wrapped so
    they accept ``(N, d)`` point arrays like the catalog functions.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    sigma0 = np.atleast_2d(np.asarray(sigma0, dtype=np.float64))
    if int(dim) != dim or dim < 1:
        raise DimensionMismatch(f"dimension must be a positive integer, got {dim}")
    dim = int(dim)
    for name, mat in (("sigma", sigma), ("sigma0", sigma0)):
        if mat.shape != (dim, dim):
            raise DimensionMismatch(f"{name} has shape {mat.shape}, expected ({dim}, {dim})")
    chol = _cholesky(sigma, "sigma")
    chol0 = _cholesky(sigma0, "sigma0")
    if np.max(np.abs(sigma - sigma0)) <= TAU_COV:
        raise CovariancesEqual("sigma and sigma0 must differ")
    if weight_fn is None:
        weight_fn = functions.ConstantWeight(1.0)
    elif not isinstance(weight_fn, functions._Catalog):
        weight_fn = functions.CallableFunction(weight_fn, non_negative=True)
    if return_fn is None:
        raise SchemaError("a return function is required")
    if not isinstance(return_fn, functions._Catalog):
        return_fn = functions.CallableFunction(return_fn)
    return GaussianMarket(dim, _frozen(sigma), _frozen(sigma0), weight_fn, return_fn,
                          _frozen(chol), _frozen(chol0))


@dataclass(frozen=True, eq=False)
class GridMarket:
    """A single-step market discretised on quadrature nodes.

    ``qweights`` are the quadrature weights ``w_k``; ``density``,
    ``reference``, ``weights`` and ``returns`` hold ``f``, ``b``, ``phi`` and
    ``g`` at the nodes. ``source`` optionally records the ``(GaussianMarket,
    GridSpec)`` pair the grid was built from, enabling refinement.
    """

    points: np.ndarray
    qweights: np.ndarray
    density: np.ndarray
    reference: np.ndarray
    weights: np.ndarray
    returns: np.ndarray
    normalization_residual: float = 0.0
    source: Optional[tuple] = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return "grid"

    @property
    def size(self) -> int:
        return self.qweights.shape[0]

    def support(self) -> np.ndarray:
        return self.density > 0

    def validate(self) -> dict:
        return {
            "normalization": abs(float(np.sum(self.qweights * self.density)) - 1.0),
            "non_positive_qweights": int(np.sum(self.qweights <= 0)),
            "negative_density": int(np.sum(self.density < 0)),
            "non_positive_reference": int(np.sum(self.reference <= 0)),
            "negative_weights": int(np.sum(self.weights < 0)),
        }


def build_grid_market(points, qweights, density, reference, weights, returns, tol=TAU_QUAD, source=None):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    k = points.shape[0]
    arrays = {}
    for name, arr in (("qweights", qweights), ("density", density), ("reference", reference),
                      ("weights", weights), ("returns", returns)):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (k,):
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({k},)")
        arrays[name] = arr
    if np.any(arrays["qweights"] <= 0):
        raise SchemaError("quadrature weights must be positive")
    if np.any(arrays["density"] < 0):
        raise NonPositiveProb("density values must be non-negative")
    if np.any(arrays["reference"] <= 0):
        raise NonPositiveReference("reference values must be positive")
    if np.any(arrays["weights"] < 0):
        raise NegativeWeight("weight values must be non-negative")
    residual = float(np.sum(arrays["qweights"] * arrays["density"])) - 1.0
    if abs(residual) > tol:
        raise ProbSumError(f"density integrates to 1{residual:+.3e} on the grid")
    return GridMarket(_frozen(points), *(_frozen(arrays[n]) for n in
                      ("qweights", "density", "reference", "weights", "returns")),
                      normalization_residual=residual, source=source)


def market_from_dict(data):
    """Build a market from the JSON market schema (already parsed)."""
    kind = data.get("type")
    if kind == "discrete":
        return build_discrete_market(data["outcomes"], data["probs"], data.get("weights"), data.get("reference"),
                                     bool(data.get("repeated_returns", False)))
    if kind == "gaussian":
        dim = data["dim"]
        sigma = data["sigma"]
        sigma0 = data["sigma0"]
        weight = functions.weight_from_spec(data.get("weight", "one"), dim)
        ret = functions.return_from_spec(data["return"], sigma, sigma0)
        return build_gaussian_market(dim, sigma, sigma0, weight, ret)
    raise SchemaError(f"unknown market type {kind!r}")
