"""Construction of optimal truncated plans by backward induction.

A plan is a triangular table of actions over states (n, s).  It is built
for a working parameter theta_star strictly between the hypothesized
values and a pair of nonnegative error multipliers: the recursion
minimizes  E[sample number at theta_star]
         + lambda0 * P(reject wrongly) + lambda1 * P(accept wrongly)
over all plans truncated at the given horizon.
"""

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _lattice
from .model import Hypotheses, log_factorial_table

__all__ = [
    "Action",
    "LagrangeConfig",
    "Plan",
    "horizon_bound",
    "build_plan",
    "effective_horizon",
    "reachable_mask",
]


class Action(IntEnum):
    CONTINUE = _lattice.CONTINUE
    ACCEPT_H0 = _lattice.ACCEPT_H0
    REJECT_H0 = _lattice.REJECT_H0


@dataclass(frozen=True)
class LagrangeConfig:
    """Hypotheses plus the working parameter and error multipliers."""

    hyp: Hypotheses
    theta_star: float
    lambda0: float
    lambda1: float

    def __post_init__(self):
        if not self.hyp.theta0 < self.theta_star < self.hyp.theta1:
            raise ValueError(
                f"theta_star must lie in (theta0, theta1) = "
                f"({self.hyp.theta0!r}, {self.hyp.theta1!r}), got {self.theta_star!r}"
            )
        if self.lambda0 < 0.0 or self.lambda1 < 0.0:
            raise ValueError("multipliers must be nonnegative")


@dataclass(eq=False)
class Plan:
    """Triangular decision table for stages 1..horizon.

    ``actions`` is the flat int8 table (see _lattice for the layout); every
    state at the final stage holds a terminal decision.  ``lagrangian_value``
    is 1 + U1(0) + U1(1) from the value recursion; NaN for tables assembled
    by hand.
    """

    config: LagrangeConfig
    horizon: int
    actions: np.ndarray
    lagrangian_value: float
    _h_eff: int | None = field(default=None, repr=False)
    _reach: np.ndarray | None = field(default=None, repr=False)

    def action(self, n: int, s: int) -> Action:
        if not (1 <= n <= self.horizon and 0 <= s <= n):
            raise IndexError(f"state ({n}, {s}) outside plan of horizon {self.horizon}")
        return Action(self.actions[_lattice.row_offset(n) + s])

    def action_row(self, n: int) -> np.ndarray:
        off = _lattice.row_offset(n)
        return self.actions[off:off + n + 1]

    @classmethod
    def from_actions(cls, config: LagrangeConfig, actions: np.ndarray,
                     horizon: int) -> "Plan":
        """Wrap a hand-assembled action table (evaluators accept any plan)."""
        actions = np.ascontiguousarray(actions, dtype=np.int8)
        if actions.shape != (_lattice.table_size(horizon),):
            raise ValueError("action table does not match the stated horizon")
        last = actions[_lattice.row_offset(horizon):]
        if np.any(last == _lattice.CONTINUE):
            raise ValueError("final-stage states must hold terminal decisions")
        return cls(config=config, horizon=horizon, actions=actions,
                   lagrangian_value=math.nan)


def complement_pair(theta0: float, theta1: float) -> tuple[float, float]:
    """Complements (1-theta0, 1-theta1), canonicalized so that a pair
    constructed as theta1 = 1 - theta0 (or vice versa) is exactly mirror
    symmetric even when the subtraction does not round-trip."""
    m0 = 1.0 - theta0
    m1 = 1.0 - theta1
    if m0 == theta1 and m1 != theta0:
        m1 = theta0
    elif m1 == theta0 and m0 != theta1:
        m0 = theta1
    return m0, m1


def horizon_bound(config: LagrangeConfig) -> int:
    """Stage bound beyond which the optimal plan never continues.

    Smallest n >= 1 with a*log(lambda0) + b*log(lambda1) - n <= (a+b)*log(w0),
    where (a, b) solve the two-observation linear system of working-vs-
    hypothesized log-likelihood ratios and w0 = 1/(theta1 - theta0).
    """
    if not (config.lambda0 > 1.0 and config.lambda1 > 1.0):
        raise ValueError("horizon_bound requires lambda0 > 1 and lambda1 > 1")
    t0, t1 = config.hyp.theta0, config.hyp.theta1
    ts = config.theta_star
    a11 = math.log(ts / t0)
    a12 = math.log(ts / t1)
    a21 = math.log((1.0 - ts) / (1.0 - t0))
    a22 = math.log((1.0 - ts) / (1.0 - t1))
    det = a11 * a22 - a12 * a21
    if det == 0.0 or not math.isfinite(det):
        raise ArithmeticError("degenerate ratio system for the horizon bound")
    a = (a22 - a12) / det
    b = (a11 - a21) / det
    log_w0 = -math.log(t1 - t0)
    value = a * math.log(config.lambda0) + b * math.log(config.lambda1) \
        - (a + b) * log_w0
    if value <= 1.0:
        return 1
    return int(math.ceil(value))


# cached binomial-mass triangles for the hypothesized probabilities, which
# are re-read by every build and every error evaluation of a solve
class _TriangleCache:
    def __init__(self, max_entries: int = 6):
        self._data: dict[tuple[float, float], tuple[int, np.ndarray]] = {}
        self._max = max_entries

    def get(self, theta: float, complement: float, horizon: int) -> np.ndarray:
        key = (theta, complement)
        got = self._data.get(key)
        if got is not None and got[0] >= horizon:
            return got[1]
        h_new = max(horizon, 64 if got is None else 2 * got[0])
        tri = np.empty(_lattice.table_size(h_new), np.float64)
        logfact = log_factorial_table(h_new + 1)
        if got is not None:
            h_old = got[0]
            tri[:_lattice.table_size(h_old)] = got[1]
            _lattice.fill_triangle(h_old + 1, h_new, theta, complement, logfact, tri)
        else:
            _lattice.fill_triangle(1, h_new, theta, complement, logfact, tri)
        if key not in self._data and len(self._data) >= self._max:
            self._data.pop(next(iter(self._data)))
        self._data[key] = (h_new, tri)
        return tri


_g_rows = _TriangleCache()


def build_plan(config: LagrangeConfig, horizon: int) -> Plan:
    """Run the scaled backward recursion and record the optimal actions."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    hyp = config.hyp
    m0, m1 = complement_pair(hyp.theta0, hyp.theta1)
    ms = 1.0 - config.theta_star
    logfact = log_factorial_table(horizon + 1)
    tri0 = _g_rows.get(hyp.theta0, m0, horizon)
    tri1 = _g_rows.get(hyp.theta1, m1, horizon)
    actions, value = _lattice.build_plan_kernel(
        horizon, hyp.theta0, m0, hyp.theta1, m1,
        config.theta_star, ms, config.lambda0, config.lambda1,
        logfact, tri0, True, tri1, True)
    return Plan(config=config, horizon=horizon, actions=actions,
                lagrangian_value=value)


def cached_rows(theta: float, complement: float, horizon: int) -> np.ndarray:
    """Binomial-mass triangle for theta, grown and reused across calls."""
    return _g_rows.get(theta, complement, horizon)


def _reach(plan: Plan) -> tuple[int, np.ndarray]:
    if plan._h_eff is None:
        h_eff, mask = _lattice.reach_kernel(plan.actions, plan.horizon)
        plan._h_eff = int(h_eff)
        plan._reach = mask
    return plan._h_eff, plan._reach


def effective_horizon(plan: Plan) -> int:
    """Largest stage the plan reaches with positive probability."""
    return _reach(plan)[0]


def reachable_mask(plan: Plan) -> np.ndarray:
    """Flat boolean mask of states reachable with positive probability."""
    return _reach(plan)[1]
