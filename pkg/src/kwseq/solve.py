"""Outer optimization: pick the working parameter and error multipliers.

For fixed multipliers the working parameter is chosen to minimize the gap
between the worst-case and design-point expected sample numbers; the
multipliers are then adjusted until the achieved error probabilities match
their nominal values.  Two drivers are provided: one builds each candidate
plan at its a-priori horizon bound, the other grows the horizon until the
attained objective stabilizes.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._matcher import match_two_axes
from ._optim import brent_minimize
from .backward import LagrangeConfig, Plan, build_plan, effective_horizon, horizon_bound
from .baselines import fss_approx
from .evaluate import asn, asn_sup, oc, quantile, stop_distribution
from .model import Hypotheses

__all__ = [
    "SolveTarget",
    "SolveReport",
    "ThetaStarResult",
    "GridPoint",
    "NonConvergenceError",
    "optimize_theta_star",
    "optimize_theta_star_truncated",
    "solve_kw",
    "grid_sweep",
]

_LOG_LAMBDA_MIN = 0.05
_LOG_LAMBDA_MAX = 18.5
_INIT_CLIP = (6.0, 13.0)
_TIGHT_TOL = 1e-6
_MAX_OPTION2_HORIZON = 1 << 17


@dataclass(frozen=True)
class SolveTarget:
    hyp: Hypotheses
    alpha_nominal: float
    beta_nominal: float
    rel_tol: float = 0.001
    delta_tol: float = 1e-3

    def __post_init__(self):
        for name in ("alpha_nominal", "beta_nominal"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be positive")


@dataclass
class SolveReport:
    theta_star: float
    lambda0: float
    lambda1: float
    plan: Plan
    alpha_achieved: float
    beta_achieved: float
    delta: float
    asn_at_star: float
    effective_horizon: int
    q99: int
    iterations: int
    status: str       # "solved" | "modified-only" | "nearest" | "nonconverged"
    method: str


@dataclass(frozen=True)
class ThetaStarResult:
    theta_star: float
    plan: Plan
    delta: float
    lagrangian_value: float


class NonConvergenceError(RuntimeError):
    """Multiplier search hit its update cap; carries the best iterate."""

    def __init__(self, message, report: SolveReport):
        super().__init__(message)
        self.report = report


def _minimize_gap(hyp, lambda0, lambda1, plan_for, xatol):
    evaluated = {}

    def gap(ts):
        plan = plan_for(ts)
        sup = asn_sup(plan, xatol=xatol, check_boundaries=False)
        d = sup.n_max - asn(plan, ts)
        evaluated[ts] = (plan, d)
        return d

    ts, _, _ = brent_minimize(gap, hyp.theta0, hyp.theta1, xatol=xatol)
    plan, d = evaluated[ts]
    return ThetaStarResult(theta_star=ts, plan=plan, delta=d,
                           lagrangian_value=plan.lagrangian_value)


def optimize_theta_star(hyp: Hypotheses, lambda0: float, lambda1: float,
                        xatol: float = 1e-4) -> ThetaStarResult:
    """Minimize the worst-case gap over the working parameter, building each
    candidate plan at its own horizon bound."""
    if not (lambda0 > 1.0 and lambda1 > 1.0):
        raise ValueError("multipliers must exceed 1 for the bounded driver")

    def plan_for(ts):
        cfg = LagrangeConfig(hyp, ts, lambda0, lambda1)
        return build_plan(cfg, horizon_bound(cfg))

    return _minimize_gap(hyp, lambda0, lambda1, plan_for, xatol)


def optimize_theta_star_truncated(hyp: Hypotheses, lambda0: float,
                                  lambda1: float, horizon: int,
                                  xatol: float = 1e-4) -> ThetaStarResult:
    """Same minimization, at a fixed truncation level."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")

    def plan_for(ts):
        return build_plan(LagrangeConfig(hyp, ts, lambda0, lambda1), horizon)

    return _minimize_gap(hyp, lambda0, lambda1, plan_for, xatol)


def _optimize_growing(hyp, lambda0, lambda1, xatol, l_rtol=1e-9):
    horizon = 16
    prev = None
    while horizon <= _MAX_OPTION2_HORIZON:
        res = optimize_theta_star_truncated(hyp, lambda0, lambda1, horizon,
                                            xatol=xatol)
        if prev is not None and abs(res.lagrangian_value - prev) \
                <= l_rtol * abs(res.lagrangian_value):
            return res
        prev = res.lagrangian_value
        horizon *= 2
    raise RuntimeError("attained objective failed to stabilize while growing "
                       f"the horizon up to {_MAX_OPTION2_HORIZON}")


def solve_kw(target: SolveTarget, method: str = "option1",
             max_updates: int = 200, xatol: float = 1e-4) -> SolveReport:
    """Full solve: match the achieved error probabilities to nominal.

    Deterministic given the target and method.  Raises NonConvergenceError
    (carrying the best iterate) if the update cap is hit while still
    outside the matching tolerance.
    """
    if method not in ("option1", "option2"):
        raise ValueError(f"method must be 'option1' or 'option2', got {method!r}")
    hyp = target.hyp
    stash = {}

    def ev(u, v):
        lam0, lam1 = math.exp(u), math.exp(v)
        if method == "option1":
            res = optimize_theta_star(hyp, lam0, lam1, xatol=xatol)
        else:
            res = _optimize_growing(hyp, lam0, lam1, xatol=xatol)
        a = 1.0 - oc(res.plan, hyp.theta0)
        b = oc(res.plan, hyp.theta1)
        stash[(u, v)] = (res, a, b)
        ea = math.log(max(a, 1e-300) / target.alpha_nominal)
        eb = math.log(max(b, 1e-300) / target.beta_nominal)
        return ea, eb

    x0 = min(max(math.log(1.0 / target.alpha_nominal ** 2), _INIT_CLIP[0]),
             _INIT_CLIP[1])
    y0 = min(max(math.log(1.0 / target.beta_nominal ** 2), _INIT_CLIP[0]),
             _INIT_CLIP[1])
    out = match_two_axes(
        ev, x0, y0,
        rel_tol=target.rel_tol, tight_tol=_TIGHT_TOL, max_updates=max_updates,
        x_limits=(_LOG_LAMBDA_MIN, _LOG_LAMBDA_MAX),
        y_limits=(_LOG_LAMBDA_MIN, _LOG_LAMBDA_MAX))

    res, a, b = stash[(out.x, out.y)]
    dist = stop_distribution(res.plan, res.theta_star)
    report = SolveReport(
        theta_star=res.theta_star,
        lambda0=math.exp(out.x),
        lambda1=math.exp(out.y),
        plan=res.plan,
        alpha_achieved=a,
        beta_achieved=b,
        delta=res.delta,
        asn_at_star=asn(res.plan, res.theta_star),
        effective_horizon=effective_horizon(res.plan),
        q99=quantile(dist, 0.99),
        iterations=out.evaluations,
        status="solved",
        method=method,
    )
    if not out.within_rel:
        if out.stalled:
            report.status = "nearest"
            return report
        report.status = "nonconverged"
        raise NonConvergenceError(
            f"error matching did not reach rel_tol={target.rel_tol} within "
            f"{max_updates} updates (best alpha={a!r}, beta={b!r})", report)
    if abs(report.delta) > target.delta_tol:
        report.status = "modified-only"
    return report


@dataclass(frozen=True)
class GridPoint:
    ln_lambda0: float
    ln_lambda1: float
    alpha: float
    beta: float
    asn_star: float
    asn_theta0: float
    asn_theta1: float
    delta: float
    fss_approx: float
    r: float
    r0: float
    r1: float


def _grid_point(args) -> GridPoint:
    theta0, theta1, u, v, xatol = args
    hyp = Hypotheses(theta0, theta1)
    res = optimize_theta_star(hyp, math.exp(u), math.exp(v), xatol=xatol)
    plan = res.plan
    a = 1.0 - oc(plan, theta0)
    b = oc(plan, theta1)
    n_star = asn(plan, res.theta_star)
    n0 = asn(plan, theta0)
    n1 = asn(plan, theta1)
    fss = fss_approx(hyp, a, b)
    return GridPoint(
        ln_lambda0=u, ln_lambda1=v, alpha=a, beta=b,
        asn_star=n_star, asn_theta0=n0, asn_theta1=n1, delta=res.delta,
        fss_approx=fss, r=fss / n_star, r0=fss / n0, r1=fss / n1)


def grid_sweep(hyp: Hypotheses, log_lambda_range=(6.0, 13.0),
               points_per_axis: int = 25, jobs: int = 1,
               xatol: float = 1e-4) -> list[GridPoint]:
    """Optimal-plan characteristics on an equispaced log-multiplier grid.

    Rows come back in lexicographic (ln lambda0, ln lambda1) order no
    matter how the points were scheduled.
    """
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be >= 2")
    lo, hi = log_lambda_range
    if not (lo < hi and lo > 0.0):
        raise ValueError(f"invalid log-multiplier range {log_lambda_range!r}")
    grid = np.linspace(lo, hi, points_per_axis)
    tasks = [(hyp.theta0, hyp.theta1, float(u), float(v), xatol)
             for u in grid for v in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_grid_point, tasks, chunksize=4))
    return [_grid_point(t) for t in tasks]
