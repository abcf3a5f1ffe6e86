"""Weighted log-optimal betting: markets, admissibility checks, optimal fractions,
and exact / Monte Carlo verification of the weighted growth-rate bounds."""

from ._accel import BACKEND
from .conditions import (
    ConditionReport,
    FeasibilityResult,
    check_conditions,
    check_orthogonality,
    check_reference_mass,
    construct_return_gaussian,
    martingale_feasibility,
    martingale_feasibility_grid,
)
from .engine import (
    AlphaValue,
    Trajectory,
    alpha_discrete,
    alpha_gaussian,
    alpha_general,
    rate_increment,
    run_trajectory,
    wealth_step,
)
from .market import (
    DiscreteMarket,
    GaussianMarket,
    GridMarket,
    build_discrete_market,
    build_gaussian_market,
    build_grid_market,
    market_from_dict,
    uniform_reference,
)
from .montecarlo import SimulationReport, drift_test, simulate
from .oracle import ExactResult, conditional_drift, exact_expected_rate, sweep_fraction
from .quadrature import GridSpec, discretize_gaussian_market, integrate
from .strategy import Strategy, constant_fraction, custom, optimal_strategy, stake, table_strategy

__version__ = "0.1.0"
