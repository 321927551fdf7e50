"""Minimax-optimal sequential sampling plans for Bernoulli hypothesis tests.

Builds exactly optimal truncated sequential tests minimizing the worst-case
expected sample number under error-probability constraints, evaluates their
exact characteristics, and compares them against exact sequential
probability-ratio and fixed-sample-size baselines.
"""

from .backward import (Action, LagrangeConfig, Plan, build_plan,
                       effective_horizon, horizon_bound, reachable_mask)
from .baselines import (EfficiencyRatios, SprtCharacteristics, SprtDesign,
                        SprtMatchResult, efficiency_ratios, fss_approx,
                        fss_exact, sprt_characteristics, sprt_match,
                        sprt_simulate)
from .evaluate import (AsnSupremum, Characteristics, SimulationResult, asn,
                       asn_sup, characteristics, delta, oc, quantile,
                       simulate, stop_distribution)
from .model import (Hypotheses, LatticeState, log_g,
                    log_likelihood_ratio_increment, scaled_binomial_G)
from .solve import (GridPoint, NonConvergenceError, SolveReport, SolveTarget,
                    ThetaStarResult, grid_sweep, optimize_theta_star,
                    optimize_theta_star_truncated, solve_kw)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AsnSupremum",
    "Characteristics",
    "EfficiencyRatios",
    "GridPoint",
    "Hypotheses",
    "LagrangeConfig",
    "LatticeState",
    "NonConvergenceError",
    "Plan",
    "SimulationResult",
    "SolveReport",
    "SolveTarget",
    "SprtCharacteristics",
    "SprtDesign",
    "SprtMatchResult",
    "ThetaStarResult",
    "asn",
    "asn_sup",
    "build_plan",
    "characteristics",
    "delta",
    "effective_horizon",
    "efficiency_ratios",
    "fss_approx",
    "fss_exact",
    "grid_sweep",
    "horizon_bound",
    "log_g",
    "log_likelihood_ratio_increment",
    "oc",
    "optimize_theta_star",
    "optimize_theta_star_truncated",
    "quantile",
    "reachable_mask",
    "scaled_binomial_G",
    "simulate",
    "solve_kw",
    "sprt_characteristics",
    "sprt_match",
    "sprt_simulate",
    "stop_distribution",
]
