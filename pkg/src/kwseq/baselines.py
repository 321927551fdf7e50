"""Exact baselines: the probability-ratio walk and fixed-sample tests.

The sequential probability ratio test is evaluated exactly by absorbing
the reach mass of the log-likelihood-ratio walk on the success-count
lattice until the un-absorbed remainder is certifiably negligible; no
excess-over-the-boundary approximations are involved.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom

from . import _lattice
from ._matcher import match_two_axes
from .model import Hypotheses, log_likelihood_ratio_increment

__all__ = [
    "SprtDesign",
    "SprtCharacteristics",
    "SprtMatchResult",
    "EfficiencyRatios",
    "sprt_characteristics",
    "sprt_match",
    "sprt_simulate",
    "fss_exact",
    "fss_approx",
    "efficiency_ratios",
]


@dataclass(frozen=True)
class SprtDesign:
    """Continuation interval (log_b, log_a) for the log-likelihood-ratio
    walk: crossing the lower endpoint accepts H0, the upper rejects it,
    and both endpoints stop on touch."""

    hyp: Hypotheses
    log_b: float
    log_a: float

    def __post_init__(self):
        if not self.log_b < 0.0 < self.log_a:
            raise ValueError(
                f"need log_b < 0 < log_a, got ({self.log_b!r}, {self.log_a!r})")


@dataclass(frozen=True)
class SprtCharacteristics:
    alpha: float
    beta: float
    asn_at: dict
    q99_at_star: int
    residual_mass: float
    asn_error_bound: float


class AbsorptionError(RuntimeError):
    """Residual mass failed to drop below tolerance within the stage cap."""


def _absorb(design: SprtDesign, theta: float, residual_tol: float,
            stage_cap: int, q_level: float = 0.99):
    d1 = log_likelihood_ratio_increment(design.hyp, 1)
    d0 = log_likelihood_ratio_increment(design.hyp, 0)
    out = _lattice.sprt_absorb_kernel(d0, d1, design.log_b, design.log_a,
                                      theta, q_level, residual_tol, stage_cap)
    accept, reject, asn, q_stage, residual, n_last, bound, ok = out
    if not ok:
        raise AbsorptionError(
            f"residual mass {residual!r} still above {residual_tol!r} after "
            f"{n_last} stages")
    return accept, reject, asn, int(q_stage), residual, bound


def sprt_characteristics(design: SprtDesign, theta: float,
                         residual_tol: float = 1e-12,
                         stage_cap: int = 10 ** 6) -> SprtCharacteristics:
    """Exact error probabilities plus sample-number mean and 0.99-quantile
    at the requested theta."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
    hyp = design.hyp
    _, rej0, asn0, q0, res0, bnd0 = _absorb(design, hyp.theta0, residual_tol,
                                            stage_cap)
    acc1, _, asn1, q1, res1, bnd1 = _absorb(design, hyp.theta1, residual_tol,
                                            stage_cap)
    if theta == hyp.theta0:
        asn_t, q_t, res_t, bnd_t = asn0, q0, res0, bnd0
    elif theta == hyp.theta1:
        asn_t, q_t, res_t, bnd_t = asn1, q1, res1, bnd1
    else:
        _, _, asn_t, q_t, res_t, bnd_t = _absorb(design, theta, residual_tol,
                                                 stage_cap)
    return SprtCharacteristics(
        alpha=rej0,
        beta=acc1,
        asn_at={theta: asn_t},
        q99_at_star=q_t,
        residual_mass=max(res0, res1, res_t),
        asn_error_bound=max(bnd0, bnd1, bnd_t),
    )


@dataclass(frozen=True)
class SprtMatchResult:
    design: SprtDesign
    alpha_achieved: float
    beta_achieved: float
    matched: bool
    note: str = ""


def sprt_match(hyp: Hypotheses, alpha_nominal: float, beta_nominal: float,
               rel_tol: float = 0.001, max_updates: int = 200,
               residual_tol: float = 1e-12) -> SprtMatchResult:
    """Find endpoints whose achieved errors match the nominal ones.

    In the symmetric case theta0 = 1 - theta1 only a discrete set of error
    levels is attainable, so the nearest achievable design is returned
    with ``matched`` False.
    """
    for name, v in (("alpha_nominal", alpha_nominal),
                    ("beta_nominal", beta_nominal)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {v!r}")

    def ev(x, y):
        # x = upper endpoint (controls alpha), y = -lower endpoint (beta)
        design = SprtDesign(hyp, log_b=-y, log_a=x)
        _, rej0, _, _, _, _ = _absorb(design, hyp.theta0, residual_tol, 10 ** 6)
        acc1, _, _, _, _, _ = _absorb(design, hyp.theta1, residual_tol, 10 ** 6)
        ea = math.log(max(rej0, 1e-300) / alpha_nominal)
        eb = math.log(max(acc1, 1e-300) / beta_nominal)
        return ea, eb

    x0 = math.log((1.0 - beta_nominal) / alpha_nominal)
    y0 = -math.log(beta_nominal / (1.0 - alpha_nominal))
    out = match_two_axes(
        ev, x0, y0,
        rel_tol=rel_tol, tight_tol=min(rel_tol, 1e-7),
        max_updates=max_updates,
        x_limits=(1e-9, 60.0), y_limits=(1e-9, 60.0))
    design = SprtDesign(hyp, log_b=-out.y, log_a=out.x)
    alpha = alpha_nominal * math.exp(out.err_x)
    beta = beta_nominal * math.exp(out.err_y)
    note = ""
    if not out.within_rel:
        note = ("only a discrete set of error levels is attainable; "
                "returning the nearest achievable design")
    return SprtMatchResult(design=design, alpha_achieved=alpha,
                           beta_achieved=beta, matched=out.within_rel,
                           note=note)


_CHUNK = 1 << 18


def sprt_simulate(design: SprtDesign, theta: float, replications: int,
                  seed: int, max_stages: int = 10 ** 6):
    """Monte Carlo run of the walk; returns (accept_rate, asn_hat,
    accept_se, asn_se)."""
    d1 = log_likelihood_ratio_increment(design.hyp, 1)
    d0 = log_likelihood_ratio_increment(design.hyp, 0)
    n_chunks = (replications + _CHUNK - 1) // _CHUNK
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    accepted = 0
    n_sum = 0.0
    n_sq_sum = 0.0
    for k in range(n_chunks):
        size = min(_CHUNK, replications - k * _CHUNK)
        rng = np.random.Generator(np.random.Philox(streams[k]))
        llr = np.zeros(size)
        alive = np.arange(size)
        for n in range(1, max_stages + 1):
            x = rng.random(alive.size) < theta
            llr[alive] += np.where(x, d1, d0)
            cur = llr[alive]
            acc = cur <= design.log_b
            rej = cur >= design.log_a
            stopped = acc | rej
            if np.any(stopped):
                accepted += int(np.sum(acc))
                cnt = int(np.sum(stopped))
                n_sum += n * cnt
                n_sq_sum += float(n) * n * cnt
                alive = alive[~stopped]
            if alive.size == 0:
                break
        else:
            raise AbsorptionError(f"{alive.size} walks still alive after "
                                  f"{max_stages} stages")
    r = replications
    p = accepted / r
    asn_hat = n_sum / r
    var_n = max(n_sq_sum / r - asn_hat * asn_hat, 0.0)
    return p, asn_hat, math.sqrt(p * (1.0 - p) / r), math.sqrt(var_n / r)


def fss_exact(hyp: Hypotheses, alpha_bound: float,
              beta_bound: float) -> tuple[int, int]:
    """Smallest fixed sample size with a count threshold k such that
    P_theta0(S_n >= k) <= alpha and P_theta1(S_n < k) <= beta.

    Returns (n, k) for the non-randomized test rejecting H0 iff S_n >= k.
    """
    for name, v in (("alpha_bound", alpha_bound), ("beta_bound", beta_bound)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
    n = 0
    while True:
        n += 1
        # smallest k with the type-I tail below alpha
        k = int(binom.isf(alpha_bound, n, hyp.theta0)) + 1
        while k > 0 and binom.sf(k - 2, n, hyp.theta0) <= alpha_bound:
            k -= 1
        while k <= n and binom.sf(k - 1, n, hyp.theta0) > alpha_bound:
            k += 1
        if k > n + 1:
            continue
        if binom.cdf(k - 1, n, hyp.theta1) <= beta_bound:
            return n, k


def fss_approx(hyp: Hypotheses, alpha_bound: float, beta_bound: float) -> float:
    """Normal-approximation fixed sample size (not rounded)."""
    for name, v in (("alpha_bound", alpha_bound), ("beta_bound", beta_bound)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
    za = ndtri(1.0 - alpha_bound)
    zb = ndtri(1.0 - beta_bound)
    t0, t1 = hyp.theta0, hyp.theta1
    num = za * math.sqrt(t0 * (1.0 - t0)) + zb * math.sqrt(t1 * (1.0 - t1))
    return (num / (t1 - t0)) ** 2


@dataclass(frozen=True)
class EfficiencyRatios:
    r_plan: float
    qr_plan: float
    r_sprt: float | None = None
    qr_sprt: float | None = None


def efficiency_ratios(fss: int, asn_star: float, q99: int,
                      sprt_asn: float | None = None,
                      sprt_q99: int | None = None) -> EfficiencyRatios:
    """Fixed sample size divided by each sequential characteristic."""
    return EfficiencyRatios(
        r_plan=fss / asn_star,
        qr_plan=fss / q99,
        r_sprt=None if sprt_asn is None else fss / sprt_asn,
        qr_sprt=None if sprt_q99 is None else fss / sprt_q99,
    )
