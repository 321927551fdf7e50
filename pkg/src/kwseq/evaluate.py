"""Exact characteristics of a truncated plan, plus a Monte Carlo check.

The acceptance probability and expected sample number come from backward
recursions over the same action table the builder produced; the
sample-number distribution comes from a forward reach-mass recursion.
All of them apply to arbitrary plans, not only optimal ones.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _lattice
from ._optim import brent_minimize
from .backward import Plan, complement_pair, cached_rows, effective_horizon
from .model import log_factorial_table

__all__ = [
    "Characteristics",
    "AsnSupremum",
    "SimulationResult",
    "oc",
    "asn",
    "stop_distribution",
    "quantile",
    "asn_sup",
    "delta",
    "simulate",
    "characteristics",
]

_EMPTY = np.empty(0, np.float64)


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie strictly inside (0, 1), got {theta!r}")


def _rows_for(plan: Plan, theta: float):
    """Reuse the cached mass triangle when theta is one of the hypothesized
    values (they are evaluated over and over during a solve)."""
    hyp = plan.config.hyp
    m0, m1 = complement_pair(hyp.theta0, hyp.theta1)
    if theta == hyp.theta0:
        return cached_rows(theta, m0, plan.horizon), True
    if theta == hyp.theta1:
        return cached_rows(theta, m1, plan.horizon), True
    return _EMPTY, False


def oc(plan: Plan, theta: float) -> float:
    """Probability of accepting H0 when the true parameter is theta."""
    _check_theta(theta)
    tri, use = _rows_for(plan, theta)
    logfact = log_factorial_table(plan.horizon + 1)
    return _lattice.oc_kernel(plan.actions, plan.horizon, theta, 1.0 - theta,
                              logfact, tri, use)


def asn(plan: Plan, theta: float) -> float:
    """Expected sample number when the true parameter is theta."""
    _check_theta(theta)
    tri, use = _rows_for(plan, theta)
    logfact = log_factorial_table(plan.horizon + 1)
    return _lattice.asn_kernel(plan.actions, plan.horizon, theta, 1.0 - theta,
                               logfact, tri, use)


def stop_distribution(plan: Plan, theta: float) -> np.ndarray:
    """P(stop at stage n) for n = 1..effective horizon; sums to one."""
    _check_theta(theta)
    p = _lattice.stop_dist_kernel(plan.actions, plan.horizon, theta)
    last = int(np.nonzero(p)[0].max())
    return p[1:last + 1]


def quantile(stop_dist: np.ndarray, level: float) -> int:
    """Smallest n whose cumulative stopping probability reaches level."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    total = float(np.sum(stop_dist))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"stopping distribution sums to {total!r}, not 1")
    cum = np.cumsum(stop_dist)
    return int(np.searchsorted(cum, level)) + 1


@dataclass(frozen=True)
class AsnSupremum:
    theta_max: float
    n_max: float
    # true when the expected sample number at theta0 or theta1 exceeds the
    # interior maximum, i.e. the worst case sits outside (theta0, theta1)
    boundary_exceeds: bool = False


def asn_sup(plan: Plan, xatol: float = 1e-4,
            check_boundaries: bool = True) -> AsnSupremum:
    """Maximize the expected sample number over theta in (theta0, theta1)."""
    hyp = plan.config.hyp
    x, fx, _ = brent_minimize(lambda t: -asn(plan, t),
                              hyp.theta0, hyp.theta1, xatol=xatol)
    flag = False
    if check_boundaries:
        edge = max(asn(plan, hyp.theta0), asn(plan, hyp.theta1))
        flag = edge > -fx
    return AsnSupremum(theta_max=x, n_max=-fx, boundary_exceeds=flag)


def delta(plan: Plan, xatol: float = 1e-4) -> float:
    """Gap between the worst-case and the design-point expected sample
    number; may be slightly negative at optimizer resolution."""
    sup = asn_sup(plan, xatol=xatol, check_boundaries=False)
    return sup.n_max - asn(plan, plan.config.theta_star)


@dataclass(frozen=True)
class Characteristics:
    """Bundle of exact characteristics at the design point."""

    oc: dict
    asn: dict
    alpha: float
    beta: float
    asn_at_star: float
    stop_dist: np.ndarray
    q99: int


def characteristics(plan: Plan, extra_thetas: tuple = ()) -> Characteristics:
    hyp = plan.config.hyp
    thetas = [hyp.theta0, hyp.theta1, plan.config.theta_star, *extra_thetas]
    oc_map = {}
    asn_map = {}
    for t in thetas:
        if t not in oc_map:
            oc_map[t] = oc(plan, t)
            asn_map[t] = asn(plan, t)
    dist = stop_distribution(plan, plan.config.theta_star)
    return Characteristics(
        oc=oc_map,
        asn=asn_map,
        alpha=1.0 - oc_map[hyp.theta0],
        beta=oc_map[hyp.theta1],
        asn_at_star=asn_map[plan.config.theta_star],
        stop_dist=dist,
        q99=quantile(dist, 0.99),
    )


@dataclass(frozen=True)
class SimulationResult:
    theta: float
    replications: int
    oc_hat: float
    asn_hat: float
    oc_se: float
    asn_se: float


_CHUNK = 1 << 18


def simulate(plan: Plan, theta: float, replications: int,
             seed: int) -> SimulationResult:
    """Run the plan on pseudo-random Bernoulli streams.

    Replications are processed in fixed-size chunks, each driven by its own
    counter-based generator spawned from the seed, so the result does not
    depend on how the chunks are scheduled.
    """
    _check_theta(theta)
    if replications < 1:
        raise ValueError("replications must be >= 1")
    offsets = np.array([_lattice.row_offset(n) for n in range(plan.horizon + 2)],
                       dtype=np.int64)
    n_chunks = (replications + _CHUNK - 1) // _CHUNK
    streams = np.random.SeedSequence(seed).spawn(n_chunks)

    accepted = 0
    n_sum = 0.0
    n_sq_sum = 0.0
    for k in range(n_chunks):
        size = min(_CHUNK, replications - k * _CHUNK)
        rng = np.random.Generator(np.random.Philox(streams[k]))
        s = np.zeros(size, dtype=np.int64)
        alive = np.arange(size)
        for n in range(1, plan.horizon + 1):
            draws = rng.random(alive.size) < theta
            s[alive] += draws
            acts = plan.actions[offsets[n] + s[alive]]
            stopped = acts != _lattice.CONTINUE
            if np.any(stopped):
                idx = alive[stopped]
                accepted += int(np.sum(acts[stopped] == _lattice.ACCEPT_H0))
                n_sum += n * idx.size
                n_sq_sum += float(n) * n * idx.size
                alive = alive[~stopped]
            if alive.size == 0:
                break

    r = replications
    oc_hat = accepted / r
    asn_hat = n_sum / r
    var_n = max(n_sq_sum / r - asn_hat * asn_hat, 0.0)
    return SimulationResult(
        theta=theta,
        replications=r,
        oc_hat=oc_hat,
        asn_hat=asn_hat,
        oc_se=math.sqrt(oc_hat * (1.0 - oc_hat) / r),
        asn_se=math.sqrt(var_n / r),
    )
