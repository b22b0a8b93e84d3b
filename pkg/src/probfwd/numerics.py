"""Numerically stable primitives shared by the analytic engines.

Two things live here: binomial tail probabilities evaluated in log space
(stable down to success probabilities around 1e-15 and up to ~1e6 trials),
and bisection on monotone functions, used everywhere a "least probability
such that ..." question is answered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BracketError, ParameterError

__all__ = [
    "SearchDirection",
    "MonotoneSearchSpec",
    "binomial_cdf",
    "binomial_cdf_many",
    "binomial_sf",
    "bisect_monotone",
]

DEFAULT_TOLERANCE = 1e-9


class SearchDirection(Enum):
    """Which one-sided predicate the bisection solves for.

    FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET assumes f is nondecreasing;
    FIND_LEAST_ARG_WITH_F_AT_MOST_TARGET assumes f is nonincreasing.
    Either way the satisfying set is an up-set in the argument, which is
    what makes bisection valid.
    """

    FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET = "at_least"
    FIND_LEAST_ARG_WITH_F_AT_MOST_TARGET = "at_most"


@dataclass(frozen=True)
class MonotoneSearchSpec:
    lower: float
    upper: float
    target: float
    tolerance: float = DEFAULT_TOLERANCE
    direction: SearchDirection = SearchDirection.FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")


def binomial_cdf_many(x: int, trials: int, probs) -> np.ndarray:
    """P(Bin(trials, prob) <= x) for one (x, trials) against many probs.

    Each entry is a log-space sum of the PMF terms 0..x; exact 0/1 limits
    are honored entry-wise.
    """
    if trials < 0:
        raise ParameterError(f"trials must be >= 0, got {trials}")
    probs = np.asarray(probs, dtype=np.float64)
    if np.any((probs < 0.0) | (probs > 1.0)):
        raise ParameterError("prob values must be in [0, 1]")
    if x < 0:
        return np.zeros(probs.shape)
    if x >= trials:
        return np.ones(probs.shape)
    out = np.empty(probs.shape)
    out[probs == 0.0] = 1.0
    out[probs == 1.0] = 0.0  # x < trials here
    interior = np.nonzero((probs > 0.0) & (probs < 1.0))[0]
    if interior.size:
        j = np.arange(x + 1, dtype=np.float64)
        log_choose = (gammaln(trials + 1.0) - gammaln(j + 1.0)
                      - gammaln(trials - j + 1.0))
        q = probs[interior][:, None]
        terms = log_choose + j * np.log(q) + (trials - j) * np.log1p(-q)
        out[interior] = np.minimum(1.0, np.exp(logsumexp(terms, axis=1)))
    return out


def binomial_cdf(x: int, trials: int, prob: float) -> float:
    """P(Bin(trials, prob) <= x), summed in log space.

    Exact 0/1 limits: returns 0.0 for x < 0, and exactly 1.0 for x >= trials
    or prob == 0.
    """
    return float(binomial_cdf_many(int(x), int(trials), np.array([float(prob)]))[0])


def binomial_sf(x: int, trials: int, prob: float) -> float:
    """P(Bin(trials, prob) > x), the complement tail, also summed in log space.

    Computed by summing the upper tail directly rather than as 1 - cdf, so
    tiny tails are not lost to cancellation.
    """
    if trials < 0:
        raise ParameterError(f"trials must be >= 0, got {trials}")
    if not 0.0 <= prob <= 1.0:
        raise ParameterError(f"prob must be in [0, 1], got {prob}")
    if x < 0:
        return 1.0
    if x >= trials or prob == 0.0:
        return 0.0
    if prob == 1.0:
        return 1.0
    j = np.arange(x + 1, trials + 1, dtype=np.float64)
    terms = (
        gammaln(trials + 1.0)
        - gammaln(j + 1.0)
        - gammaln(trials - j + 1.0)
        + j * math.log(prob)
        + (trials - j) * math.log1p(-prob)
    )
    return min(1.0, float(math.exp(logsumexp(terms))))


def bisect_monotone(f, spec: MonotoneSearchSpec) -> float:
    """Least argument in [lower, upper] satisfying the direction predicate.

    Uses at most ceil(log2((upper-lower)/tolerance)) + 2 evaluations of f.
    Raises BracketError (carrying f(lower) and f(upper)) when the predicate
    fails at `upper`, i.e. the target is unattainable on the interval.
    """
    if spec.direction is SearchDirection.FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET:
        def satisfied(v):
            return v >= spec.target
    else:
        def satisfied(v):
            return v <= spec.target

    f_lower = f(spec.lower)
    if satisfied(f_lower):
        return spec.lower
    f_upper = f(spec.upper)
    if not satisfied(f_upper):
        raise BracketError(
            f"target {spec.target} unattainable on [{spec.lower}, {spec.upper}]: "
            f"f(lower)={f_lower}, f(upper)={f_upper}",
            f_lower=f_lower,
            f_upper=f_upper,
        )

    lo, hi = spec.lower, spec.upper
    while hi - lo > spec.tolerance:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # float resolution exhausted
            break
        if satisfied(f(mid)):
            hi = mid
        else:
            lo = mid
    return hi
