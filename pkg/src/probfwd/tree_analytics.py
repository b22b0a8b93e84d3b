"""Exact and bounded analysis of probabilistic forwarding on rooted d-ary trees.

On a complete d-ary tree of height H whose leaves never forward, a node at
level l+1 receives a given coded packet iff every ancestor on levels 1..l
forwarded it, so its reception count across n packets is Bin(n, p^l). The
expected fraction of nodes that fail to collect k packets is therefore

    sum_{l=0}^{H-1} d^(l+1) * P(Bin(n, p^l) <= k-1) / N,   N = (d^(H+1)-1)/(d-1)

which is nonincreasing in p. The minimum forwarding probability for a
near-broadcast is the least p keeping that fraction at or below delta, and
the expected total transmissions at probability p is

    n * ((dp)^H - 1) / (dp - 1)        (limit n*H at dp = 1).

Closed-form lower/upper bounds on the minimum probability (binary trees)
are provided alongside the exact search; together they sandwich it as
Theta((k/n)^(1/(H-1))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UndecodableError
from .numerics import (
    DEFAULT_TOLERANCE,
    MonotoneSearchSpec,
    SearchDirection,
    binomial_cdf_many,
    bisect_monotone,
)

__all__ = [
    "TreeProtocolParams",
    "tree_failure_fraction",
    "tree_min_p",
    "tree_tau",
    "min_p_lower_bound",
    "min_p_upper_bound",
    "sweep_rows",
]

# Below this distance from dp = 1 the geometric-series ratio is evaluated by
# its series expansion; the direct quotient is 0/0-unstable there.
_TAU_SINGULARITY_WINDOW = 1e-8


@dataclass(frozen=True)
class TreeProtocolParams:
    """Protocol knobs for the tree analysis: tree shape, code, target, probability."""

    height: int
    data_packets: int
    coded_packets: int
    delta: float
    forward_prob: float = 1.0
    arity: int = 2

    def __post_init__(self):
        if self.height < 2:
            raise ParameterError(f"height must be >= 2, got {self.height}")
        if self.arity < 2:
            raise ParameterError(f"arity must be >= 2, got {self.arity}")
        if self.data_packets < 1:
            raise ParameterError(f"data_packets must be >= 1, got {self.data_packets}")
        if self.coded_packets < self.data_packets:
            raise UndecodableError(
                f"coded_packets {self.coded_packets} < data_packets {self.data_packets}: "
                "no node can ever decode")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must be in (0, 1), got {self.delta}")
        if not 0.0 <= self.forward_prob <= 1.0:
            raise ParameterError(f"forward_prob must be in [0, 1], got {self.forward_prob}")


def _failure_fraction(p: float, H: int, d: int, k: int, n: int) -> float:
    # Weights d^(l+1)/N computed via logs so huge trees (H = 50 means
    # N = 2^51 - 1) stay finite.
    log_n_total = math.log((d ** (H + 1) - 1) // (d - 1))
    levels = np.arange(H, dtype=np.float64)
    weights = np.exp((levels + 1.0) * math.log(d) - log_n_total)
    reception_probs = p ** levels
    return min(1.0, float(weights @ binomial_cdf_many(k - 1, n, reception_probs)))


def tree_failure_fraction(params: TreeProtocolParams) -> float:
    """Expected fraction of nodes receiving fewer than k of the n packets."""
    return _failure_fraction(
        params.forward_prob, params.height, params.arity,
        params.data_packets, params.coded_packets)


def tree_min_p(params: TreeProtocolParams,
               tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Least forwarding probability whose failure fraction is at most delta.

    The failure fraction is nonincreasing in p, so this is a monotone
    bisection on [0, 1]; ignores params.forward_prob. Returns 0.0 when even
    a silent network meets the target.
    """
    def failure(p: float) -> float:
        return _failure_fraction(p, params.height, params.arity,
                                 params.data_packets, params.coded_packets)

    spec = MonotoneSearchSpec(
        lower=0.0, upper=1.0, target=params.delta, tolerance=tolerance,
        direction=SearchDirection.FIND_LEAST_ARG_WITH_F_AT_MOST_TARGET)
    return bisect_monotone(failure, spec)


def tree_tau(height: int, arity: int, coded_packets: int, forward_prob: float) -> float:
    """Expected total simulcast transmissions: n * ((dp)^H - 1) / (dp - 1).

    Level l contributes d^l nodes each transmitting a given packet with
    probability p^l; the root always transmits. The ratio has a removable
    singularity at dp = 1 where the value is n * H.
    """
    if height < 1:
        raise ParameterError(f"height must be >= 1, got {height}")
    if not 0.0 <= forward_prob <= 1.0:
        raise ParameterError(f"forward_prob must be in [0, 1], got {forward_prob}")
    x = arity * forward_prob
    if abs(x - 1.0) < _TAU_SINGULARITY_WINDOW:
        # sum_{l<H} x^l = H + (H choose 2)(x-1) + O((x-1)^2); the linear term
        # keeps the value smooth when bisection lands next to the singularity.
        return coded_packets * (height + 0.5 * height * (height - 1) * (x - 1.0))
    return coded_packets * (x ** height - 1.0) / (x - 1.0)


def _delta_prime(height: int, delta: float) -> float:
    top = 2.0 ** (height + 1)
    return min(delta * (top - 1.0) / (top - 2.0), 1.0)


def min_p_lower_bound(height: int, data_packets: int, coded_packets: int) -> float:
    """Closed-form lower bound on the minimum probability (binary tree).

    ((k-1)/n)^(1/(H-1)) for k >= 2; (1/n)^(1/(H-1)) for k = 1 with n > 1;
    the vacuous 0 for k = n = 1.
    """
    if height < 2:
        raise ParameterError(f"height must be >= 2, got {height}")
    if data_packets < 1 or coded_packets < 1:
        raise ParameterError("packet counts must be >= 1")
    k, n = data_packets, coded_packets
    if k == 1:
        if n == 1:
            return 0.0
        return (1.0 / n) ** (1.0 / (height - 1))
    return ((k - 1.0) / n) ** (1.0 / (height - 1))


def min_p_upper_bound(height: int, data_packets: int, coded_packets: int,
                      delta: float) -> float:
    """Closed-form upper bound on the minimum probability (binary tree).

    With delta' = min{delta * (2^(H+1)-1)/(2^(H+1)-2), 1} and slack
    t = sqrt(2(k-1)(-ln delta') + (ln delta')^2) - ln delta' >= 0, the bound
    is min{((k-1+t)/n)^(1/(H-1)), 1} for k >= 2 and
    min{((-ln delta')/n)^(1/(H-1)), 1} for k = 1.
    """
    if height < 2:
        raise ParameterError(f"height must be >= 2, got {height}")
    if not 0.0 < delta <= 1.0:
        raise ParameterError(f"delta must be in (0, 1], got {delta}")
    if data_packets < 1 or coded_packets < 1:
        raise ParameterError("packet counts must be >= 1")
    k, n = data_packets, coded_packets
    neg_log = -math.log(_delta_prime(height, delta))
    exponent = 1.0 / (height - 1)
    if k == 1:
        return min((neg_log / n) ** exponent, 1.0)
    t = math.sqrt(2.0 * (k - 1) * neg_log + neg_log * neg_log) + neg_log
    return min(((k - 1.0 + t) / n) ** exponent, 1.0)


def sweep_rows(height: int, data_packets: int, delta: float,
               coded_packet_values, tolerance: float = DEFAULT_TOLERANCE):
    """(n, p_min, lower, upper, tau) rows over a range of n, binary tree."""
    rows = []
    for n in coded_packet_values:
        params = TreeProtocolParams(
            height=height, data_packets=data_packets, coded_packets=int(n),
            delta=delta)
        p_min = tree_min_p(params, tolerance=tolerance)
        rows.append((
            int(n),
            p_min,
            min_p_lower_bound(height, data_packets, int(n)),
            min_p_upper_bound(height, data_packets, int(n), delta),
            tree_tau(height, params.arity, int(n), p_min),
        ))
    return rows
