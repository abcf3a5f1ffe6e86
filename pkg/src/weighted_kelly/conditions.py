"""Admissibility conditions, martingale feasibility, and the Gaussian martingale return.

Two conditions gate the supermartingale bound:

* orthogonality: ``int phi * b * g = 0`` (a sum for finite markets);
* reference mass: ``int phi * b <= int phi * f``.

Feasibility asks whether the outcome density factorises as
``f = b * (1 + D g)`` for a single fraction ``D`` in ``[0, 1]``; if so the
constant-fraction strategy ``C = D * Z`` is log-optimal.
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import AllReturnsNearZero, NotPositiveDefinite, ZeroReturnOutcome
from .functions import MartingaleReturn
from .market import DiscreteMarket, GaussianMarket, GridMarket
from .quadrature import GridSpec, LebesgueBox, cover_scales, discretize_gaussian_market, integrate
from .tolerances import TAU_COND, TAU_FEAS, TAU_FEAS_GRID, TAU_G, TAU_QUAD


@dataclass
class ConditionReport:
    market_kind: str
    orthogonality_residual: float
    mass_lhs: float
    mass_rhs: float
    orthogonality_passed: bool
    mass_passed: bool
    tolerance_used: float
    reference_mass: float
    reference_normalized: bool
    # Gaussian markets only: orthogonality against the product kernel
    # exp(-x'(S^-1 + S0^-1)x/2), reported beside the direct form for comparison.
    joint_kernel_residual: Optional[float] = None
    joint_kernel_passed: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return self.orthogonality_passed and self.mass_passed

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass
class FeasibilityResult:
    feasible: bool
    D: Optional[float]
    per_outcome_D: List[Optional[float]]
    max_spread: float
    tolerance_used: float
    reason: str = ""
    market_kind: str = "discrete"
    candidate_count: int = 0
    candidate_min: Optional[float] = None
    candidate_max: Optional[float] = None
    excluded: List[int] = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        if self.market_kind != "discrete":
            # grid candidate lists run to thousands of entries; keep the summary only
            out.pop("per_outcome_D")
            out.pop("excluded")
        return out


# --------------------------------------------------------------------------
# condition residuals

def _gaussian_integral(market, fn, grid_spec, tol=TAU_QUAD):
    return integrate(fn, LebesgueBox(cover_scales(market)), grid_spec, tol=tol).value


def check_orthogonality(market, grid_spec: Optional[GridSpec] = None) -> float:
    """Signed residual of ``int phi * b * g``; compare its magnitude against ``TAU_COND``."""
    if isinstance(market, DiscreteMarket):
        return float(np.sum(market.weights * market.reference * market.outcomes))
    if isinstance(market, GridMarket):
        return float(np.sum(market.qweights * market.weights * market.reference * market.returns))
    if isinstance(market, GaussianMarket):
        return _gaussian_integral(
            market, lambda x: market.weight_fn(x) * market.reference_density(x) * market.return_fn(x), grid_spec)
    raise TypeError(f"unsupported market {type(market).__name__}")


def check_reference_mass(market, grid_spec: Optional[GridSpec] = None):
    """``(int phi * b, int phi * f)``; the condition holds when ``lhs <= rhs + TAU_COND``."""
    if isinstance(market, DiscreteMarket):
        return (float(np.sum(market.weights * market.reference)),
                float(np.sum(market.weights * market.probs)))
    if isinstance(market, GridMarket):
        w = market.qweights * market.weights
        return float(np.sum(w * market.reference)), float(np.sum(w * market.density))
    if isinstance(market, GaussianMarket):
        lhs = _gaussian_integral(market, lambda x: market.weight_fn(x) * market.reference_density(x), grid_spec)
        rhs = _gaussian_integral(market, lambda x: market.weight_fn(x) * market.density(x), grid_spec)
        return lhs, rhs
    raise TypeError(f"unsupported market {type(market).__name__}")


def joint_kernel_orthogonality(market: GaussianMarket, grid_spec: Optional[GridSpec] = None) -> float:
    """``int phi(x) g(x) exp(-x'(S^-1 + S0^-1)x / 2) dx`` (unnormalised kernel)."""
    prec = np.linalg.inv(market.sigma) + np.linalg.inv(market.sigma0)

    def fn(x):
        q = np.einsum("ni,ij,nj->n", x, prec, x)
        return market.weight_fn(x) * market.return_fn(x) * np.exp(-0.5 * q)

    return _gaussian_integral(market, fn, grid_spec)


def reference_total_mass(market, grid_spec: Optional[GridSpec] = None) -> float:
    if isinstance(market, DiscreteMarket):
        return float(np.sum(market.reference))
    if isinstance(market, GridMarket):
        return float(np.sum(market.qweights * market.reference))
    return _gaussian_integral(market, market.reference_density, grid_spec)


def check_conditions(market, tol=TAU_COND, grid_spec: Optional[GridSpec] = None) -> ConditionReport:
    resid = check_orthogonality(market, grid_spec)
    lhs, rhs = check_reference_mass(market, grid_spec)
    ref_mass = reference_total_mass(market, grid_spec)
    report = ConditionReport(
        market_kind=market.kind,
        orthogonality_residual=resid,
        mass_lhs=lhs,
        mass_rhs=rhs,
        orthogonality_passed=bool(abs(resid) <= tol),
        mass_passed=bool(lhs <= rhs + tol),
        tolerance_used=tol,
        reference_mass=ref_mass,
        reference_normalized=bool(abs(ref_mass - 1.0) <= tol),
    )
    if isinstance(market, GaussianMarket):
        jk = joint_kernel_orthogonality(market, grid_spec)
        report.joint_kernel_residual = jk
        report.joint_kernel_passed = bool(abs(jk) <= tol)
    return report


# --------------------------------------------------------------------------
# feasibility

def _snap_unit(D, tol):
    # values within tol of the unit interval are rounding noise at the boundary
    if -tol <= D < 0.0:
        return 0.0
    if 1.0 < D <= 1.0 + tol:
        return 1.0
    return D


def martingale_feasibility(market, use_reference=False, tol=None, grid_spec=None) -> FeasibilityResult:
    """Decide whether a constant fraction makes the weighted rate a martingale.

    For finite markets the candidates are ``(m p_i - 1) / E_i`` (uniform
    reference); with ``use_reference=True`` the market's own reference gives
    ``(p_i / b_i - 1) / E_i`` instead. Grid and Gaussian markets are routed to
    :func:`martingale_feasibility_grid`.
    """
    if isinstance(market, GridMarket):
        return martingale_feasibility_grid(market, tol=TAU_FEAS_GRID if tol is None else tol)
    if isinstance(market, GaussianMarket):
        grid = discretize_gaussian_market(market, grid_spec)
        return martingale_feasibility_grid(grid, tol=TAU_FEAS_GRID if tol is None else tol)
    tol = TAU_FEAS if tol is None else tol
    E = market.outcomes
    numer = market.probs / market.reference - 1.0 if use_reference else market.m * market.probs - 1.0
    candidates: List[Optional[float]] = []
    excluded = []
    for i in range(market.m):
        if E[i] == 0.0:
            if abs(numer[i]) > tol:
                raise ZeroReturnOutcome(
                    f"outcome {i} has zero return but its density differs from the reference")
            candidates.append(None)
            excluded.append(i)
        else:
            candidates.append(float(numer[i] / E[i]))
    vals = np.array([c for c in candidates if c is not None])
    spread = float(vals.max() - vals.min())
    D = _snap_unit(float(vals.mean()), tol)
    reason = ""
    if spread > tol:
        reason = "candidate fractions differ across outcomes"
    elif not 0.0 <= D <= 1.0:
        reason = "common fraction lies outside [0, 1]"
    elif np.any(1.0 + D * E <= 0.0):
        reason = "fraction ruins the bettor on some outcome"
    feasible = reason == ""
    return FeasibilityResult(
        feasible=feasible, D=D if feasible else None, per_outcome_D=candidates,
        max_spread=spread, tolerance_used=tol, reason=reason, market_kind="discrete",
        candidate_count=int(vals.size), candidate_min=float(vals.min()),
        candidate_max=float(vals.max()), excluded=excluded)


def martingale_feasibility_grid(grid: GridMarket, tol=TAU_FEAS_GRID, g_tol=TAU_G) -> FeasibilityResult:
    """Pointwise candidates ``(f/b - 1)/g`` over the support of ``f`` where ``|g| > g_tol``."""
    support = grid.density > 0
    ratio = grid.density / grid.reference
    usable = support & (np.abs(grid.returns) > g_tol)
    if not np.any(usable):
        raise AllReturnsNearZero(f"no support point has |g| > {g_tol}")
    cand = (ratio[usable] - 1.0) / grid.returns[usable]
    spread = float(cand.max() - cand.min())
    D = _snap_unit(float(cand.mean()), tol)
    flat = support & ~usable
    reason = ""
    if spread > tol:
        reason = "candidate fractions differ across grid points"
    elif np.any(np.abs(ratio[flat] - 1.0) > tol):
        reason = "density differs from the reference where the return vanishes"
    elif not 0.0 <= D <= 1.0:
        reason = "common fraction lies outside [0, 1]"
    elif np.any(1.0 + D * grid.returns[support] <= 0.0):
        reason = "fraction ruins the bettor on part of the support"
    feasible = reason == ""
    return FeasibilityResult(
        feasible=feasible, D=D if feasible else None, per_outcome_D=cand.tolist(),
        max_spread=spread, tolerance_used=tol, reason=reason, market_kind="grid",
        candidate_count=int(cand.size), candidate_min=float(cand.min()),
        candidate_max=float(cand.max()))


def construct_return_gaussian(sigma, sigma0, D) -> MartingaleReturn:
    """Return function for which ``C = D * Z`` is the martingale strategy.

    ``D`` must lie strictly inside ``(0, 1)``.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    sigma0 = np.atleast_2d(np.asarray(sigma0, dtype=float))
    for name, mat in (("sigma", sigma), ("sigma0", sigma0)):
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    return MartingaleReturn(sigma, sigma0, D)
