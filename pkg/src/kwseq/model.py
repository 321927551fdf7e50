"""Bernoulli likelihood primitives on the success-count lattice.

Everything downstream works with the point masses of the success count
rather than raw path probabilities, so binomial weights must stay finite
for horizons in the thousands.  They are evaluated through a shared
log-factorial table and exponentiated at the last moment.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Hypotheses",
    "LatticeState",
    "log_factorial_table",
    "log_g",
    "scaled_binomial_G",
    "log_likelihood_ratio_increment",
]

# Grown on demand, replaced atomically; readers holding an older (shorter)
# table still see correct values.
_logfact = gammaln(np.arange(256, dtype=np.float64) + 1.0)


def log_factorial_table(n_max: int) -> np.ndarray:
    """Table with log(k!) at index k, valid for k = 0..n_max at least."""
    global _logfact
    if _logfact.size <= n_max:
        size = max(n_max + 2, 2 * _logfact.size)
        _logfact = gammaln(np.arange(size, dtype=np.float64) + 1.0)
    return _logfact


def _check_prob(value: float, name: str = "theta") -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value!r}")


@dataclass(frozen=True)
class Hypotheses:
    """A simple-vs-simple pair of Bernoulli success probabilities."""

    theta0: float
    theta1: float

    def __post_init__(self):
        _check_prob(self.theta0, "theta0")
        _check_prob(self.theta1, "theta1")
        if not self.theta0 < self.theta1:
            raise ValueError(
                f"require theta0 < theta1, got ({self.theta0!r}, {self.theta1!r})"
            )


@dataclass(frozen=True)
class LatticeState:
    """State after n observations of which s were successes."""

    n: int
    s: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"stage index must be >= 1, got {self.n}")
        if not 0 <= self.s <= self.n:
            raise ValueError(f"success count must lie in [0, {self.n}], got {self.s}")


def log_g(theta: float, state: LatticeState) -> float:
    """Log joint probability of any single path with the given success count."""
    _check_prob(theta)
    # log(1 - theta) is taken on the rounded complement (not log1p) so that
    # complementary parameter pairs see bit-identical values under s <-> n-s.
    return state.s * math.log(theta) + (state.n - state.s) * math.log(1.0 - theta)


def scaled_binomial_G(theta: float, state: LatticeState) -> float:
    """Binomial point mass C(n,s) * theta^s * (1-theta)^(n-s).

    Computed in log space; safe for n up to several thousand where C(n,s)
    alone would overflow.
    """
    _check_prob(theta)
    n, s = state.n, state.s
    lf = log_factorial_table(n)
    lg = lf[n] - (lf[s] + lf[n - s])
    return math.exp(lg + (s * math.log(theta) + (n - s) * math.log(1.0 - theta)))


def log_likelihood_ratio_increment(hyp: Hypotheses, x: int) -> float:
    """Log likelihood ratio contributed by one observation x in {0, 1}."""
    if x not in (0, 1):
        raise ValueError(f"observation must be 0 or 1, got {x!r}")
    if x == 1:
        return math.log(hyp.theta1 / hyp.theta0)
    return math.log((1.0 - hyp.theta1) / (1.0 - hyp.theta0))
