"""Deterministic integration against Gaussian densities and on truncated boxes.

Two node schemes are available:

``tensor``
    Midpoint rule with ``K`` cells per axis on ``[-R s_i, R s_i]`` where
    ``s_i`` is the axis standard deviation. Positive weights, spectrally
    accurate for Gaussian integrands, and symmetric about the origin (for even
    ``K`` no node sits on a coordinate hyperplane).
``gauss-hermite``
    Probabilists' Gauss-Hermite nodes mapped through the Cholesky factor;
    exact for polynomials of degree ``2K - 1`` against the Gaussian weight.

The error estimate is always ``|value(K) - value(2K)|`` and the finer value
is returned. Dimensions above ``MAX_GRID_DIM`` fall back to seeded Monte
Carlo with the standard error as the estimate.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import QuadratureNotConverged, SchemaError
from .market import GaussianMarket, build_grid_market
from .tolerances import TAU_QUAD

MAX_GRID_DIM = 3
MC_SAMPLES = 1 << 20
_SCHEMES = ("tensor", "gauss-hermite")


@dataclass(frozen=True)
class GridSpec:
    scheme: str = "tensor"
    K: int = 64
    R: float = 8.0

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise SchemaError(f"unknown quadrature scheme {self.scheme!r}")
        if int(self.K) != self.K or self.K < 2:
            raise SchemaError(f"K must be an integer >= 2, got {self.K}")
        if not self.R > 0:
            raise SchemaError(f"R must be positive, got {self.R}")

    def refined(self):
        return GridSpec(self.scheme, 2 * self.K, self.R)

    def to_dict(self):
        return {"scheme": self.scheme, "K": int(self.K), "R": float(self.R)}

    @classmethod
    def from_dict(cls, data):
        scheme = data.get("scheme", "tensor")
        if scheme == "gaussian":
            scheme = "gauss-hermite"
        return cls(scheme, int(data.get("K", 64)), float(data.get("R", 8.0)))


@dataclass(frozen=True)
class LebesgueBox:
    """Plain Lebesgue measure; ``scales`` are the per-axis standard deviations sizing the box."""

    scales: tuple


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    method: str
    nodes: int


def tensor_rule(scales, K, R):
    """Midpoint nodes and weights on the box ``prod [-R s_i, R s_i]``."""
    scales = np.asarray(scales, dtype=float)
    axes = []
    widths = []
    for s in scales:
        h = 2.0 * R * s / K
        axes.append(-R * s + h * (np.arange(K) + 0.5))
        widths.append(h)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in mesh], axis=1)
    weights = np.full(points.shape[0], float(np.prod(widths)))
    return points, weights


def hermite_rule(chol, K):
    """Nodes/weights integrating against ``N(0, L L')`` (weights sum to one)."""
    chol = np.atleast_2d(chol)
    d = chol.shape[0]
    z1, w1 = np.polynomial.hermite_e.hermegauss(int(K))
    w1 = w1 / np.sqrt(2.0 * np.pi)
    mesh = np.meshgrid(*([z1] * d), indexing="ij")
    z = np.stack([g.ravel() for g in mesh], axis=1)
    wmesh = np.meshgrid(*([w1] * d), indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
    return z @ chol.T, w


def _gauss_logpdf(points, chol):
    d = chol.shape[0]
    z = np.linalg.solve(chol, points.T)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * np.sum(z * z, axis=0) - 0.5 * (d * np.log(2.0 * np.pi) + logdet)


def _evaluate(integrand, density_spec, spec):
    if isinstance(density_spec, LebesgueBox):
        if spec.scheme != "tensor":
            raise SchemaError("Lebesgue integrals need the tensor scheme")
        pts, w = tensor_rule(density_spec.scales, spec.K, spec.R)
        return float(np.sum(w * integrand(pts)))
    cov = np.atleast_2d(np.asarray(density_spec, dtype=float))
    chol = np.linalg.cholesky(cov)
    if spec.scheme == "gauss-hermite":
        pts, w = hermite_rule(chol, spec.K)
        return float(np.sum(w * integrand(pts)))
    pts, w = tensor_rule(np.sqrt(np.diag(cov)), spec.K, spec.R)
    return float(np.sum(w * np.exp(_gauss_logpdf(pts, chol)) * integrand(pts)))


def _monte_carlo(integrand, density_spec, seed=0):
    key = kernels.run_key(seed)
    if isinstance(density_spec, LebesgueBox):
        scales = np.asarray(density_spec.scales, dtype=float)
        d = scales.size
        # proposal wider than every integrand the package builds, so the ratio has finite variance
        chol = np.diag(1.5 * scales)
        z = kernels.standard_normals(1, d, key, 0, MC_SAMPLES)[:, 0, :]
        pts = z @ chol.T
        vals = integrand(pts) / np.exp(_gauss_logpdf(pts, chol))
    else:
        cov = np.atleast_2d(np.asarray(density_spec, dtype=float))
        d = cov.shape[0]
        z = kernels.standard_normals(1, d, key, 0, MC_SAMPLES)[:, 0, :]
        vals = integrand(z @ np.linalg.cholesky(cov).T)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(vals.size))
    return QuadResult(mean, se, "monte-carlo", vals.size)


def _dim(density_spec):
    if isinstance(density_spec, LebesgueBox):
        return len(density_spec.scales)
    return np.atleast_2d(density_spec).shape[0]


def integrate(integrand, density_spec, grid_spec: Optional[GridSpec] = None, tol=TAU_QUAD):
    """Integrate ``integrand`` against a Gaussian density or Lebesgue measure.

    ``density_spec`` is either a covariance matrix (integrate against
    ``N(0, cov)``) or a :class:`LebesgueBox`. ``integrand`` maps ``(N, d)``
    points to ``(N,)`` values. Raises :class:`QuadratureNotConverged` when the
    ``K`` and ``2K`` values differ by more than ``tol``; the Monte Carlo
    fallback for high dimensions never raises.
    """
    spec = grid_spec or GridSpec()
    if _dim(density_spec) > MAX_GRID_DIM:
        return _monte_carlo(integrand, density_spec)
    coarse = _evaluate(integrand, density_spec, spec)
    fine_spec = spec.refined()
    fine = _evaluate(integrand, density_spec, fine_spec)
    err = abs(fine - coarse)
    if err > tol:
        raise QuadratureNotConverged(
            f"quadrature changed by {err:.3e} (> {tol:.1e}) when K doubled from {spec.K}",
            value=fine, error_estimate=err)
    return QuadResult(fine, err, spec.scheme, fine_spec.K ** _dim(density_spec))


def cover_scales(market: GaussianMarket):
    """Per-axis scale large enough to hold both the outcome and reference densities."""
    return tuple(np.maximum(np.sqrt(np.diag(market.sigma)), np.sqrt(np.diag(market.sigma0))))


def discretize_gaussian_market(market: GaussianMarket, grid_spec: Optional[GridSpec] = None, tol=TAU_QUAD):
    """Evaluate ``f``, ``b``, ``phi`` and ``g`` on quadrature nodes.

    The grid is not renormalised; the residual of ``sum w f`` against one is
    kept on the result, and a residual above ``tol`` raises.
    """
    spec = grid_spec or GridSpec()
    if market.dim > MAX_GRID_DIM:
        raise SchemaError(f"grid markets support dim <= {MAX_GRID_DIM}")
    if spec.scheme == "tensor":
        pts, w = tensor_rule(cover_scales(market), spec.K, spec.R)
        f = market.density(pts)
    else:
        pts, omega = hermite_rule(market.chol, spec.K)
        f = market.density(pts)
        keep = (omega > 0) & (f > 0)
        pts, omega, f = pts[keep], omega[keep], f[keep]
        w = omega / f
    b = market.reference_density(pts)
    residual = float(np.sum(w * f)) - 1.0
    if abs(residual) > tol:
        raise QuadratureNotConverged(
            f"density integrates to 1{residual:+.3e} on the grid", value=1.0 + residual,
            error_estimate=abs(residual))
    return build_grid_market(pts, w, f, b, market.weight_fn(pts), market.return_fn(pts),
                             tol=tol, source=(market, spec))
