"""Percolation-theoretic predictions for probabilistic forwarding on large grids.

With theta_plus the probability that the origin's extended cluster is the
infinite one, the limiting fraction of nodes that decode (receive at least
k of n coded packets) is

    coverage(theta_plus, k, n)
        = sum_{t=k}^{n} sum_{j=k}^{t} C(n,t) C(t,j)
              theta_plus^(t+j) (1-theta_plus)^(n-j)
        = sum_{t=k}^{n} P(Bin(n, theta_plus) = t) * P(Bin(t, theta_plus) >= k)

(the second line regroups the first exactly and is how it is evaluated:
O(n) log-space terms instead of O(n^2)). Inverting coverage >= 1 - delta
over theta_plus and mapping theta_plus back to p through an empirical
curve table yields the minimum forwarding probability; the expected
transmissions per grid site at that probability is n * theta(p)^2 / p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .errors import ParameterError, SubcriticalError
from .numerics import (
    MonotoneSearchSpec,
    SearchDirection,
    binomial_sf,
    bisect_monotone,
)
from .percolation import ThetaTable

__all__ = [
    "GridPrediction",
    "theta_plus_kn",
    "grid_coverage",
    "grid_min_p",
    "single_packet_transmission_density",
    "RELIABLE_P_CUTOFF",
]

# Only table rows strictly above this probability feed predictions: just
# above the believed ~0.59 threshold, where the estimator is trustworthy.
RELIABLE_P_CUTOFF = 0.6

_COVERAGE_TOLERANCE = 1e-9
_MONOTONICITY_PROBE_STEP = 1e-3


@dataclass(frozen=True)
class GridPrediction:
    """Minimum forwarding probability and per-site transmission estimate."""

    p_min: float
    tau_normalized: float
    theta_at_pmin: float
    theta_plus_at_pmin: float
    reliable: bool


def _validate_coverage_args(theta_plus: float, k: int, n: int) -> None:
    if not 0.0 <= theta_plus <= 1.0:
        raise ParameterError(f"theta_plus must be in [0, 1], got {theta_plus}")
    if n < 0 or k < 0 or k > n:
        raise ParameterError(f"need 0 <= k <= n, got k={k}, n={n}")


def theta_plus_kn(theta_plus: float, k: int, n: int) -> float:
    """P(Bin(n, theta_plus) >= k): origin's extended cluster is the infinite
    one in at least k of n independent percolations."""
    _validate_coverage_args(theta_plus, k, n)
    if k == 0:
        return 1.0
    return binomial_sf(k - 1, n, theta_plus)


def _coverage_batch(theta_plus: np.ndarray, k: int, n: int) -> np.ndarray:
    """grid_coverage over an array of theta_plus values, chunked to bound memory."""
    out = np.empty(theta_plus.size)
    out[theta_plus <= 0.0] = 0.0
    out[theta_plus >= 1.0] = 1.0
    interior = np.nonzero((theta_plus > 0.0) & (theta_plus < 1.0))[0]
    if interior.size == 0:
        return out
    t = np.arange(k, n + 1, dtype=np.float64)
    log_choose = gammaln(n + 1.0) - gammaln(t + 1.0) - gammaln(n - t + 1.0)
    chunk = max(1, int(2e6 / t.size))
    for lo in range(0, interior.size, chunk):
        idx = interior[lo:lo + chunk]
        q = theta_plus[idx][:, None]
        log_pmf = log_choose + t * np.log(q) + (n - t) * np.log1p(-q)
        # P(Bin(t, theta_plus) >= k) = I_{theta_plus}(k, t - k + 1), vectorized
        site_tail = betainc(float(k), t - k + 1.0, q)
        out[idx] = np.minimum(1.0, (np.exp(log_pmf) * site_tail).sum(axis=1))
    return out


def grid_coverage(theta_plus: float, k: int, n: int) -> float:
    """Limiting decoder fraction for k-of-n forwarding at a given theta_plus.

    Evaluates the regrouped double sum: the outer index t counts the
    percolations whose infinite extended cluster contains the origin, the
    inner factor is the chance a far site joins at least k of those t.
    Log-space binomials keep it stable out to n ~ 1e4.
    """
    _validate_coverage_args(theta_plus, k, n)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    return float(_coverage_batch(np.array([theta_plus], dtype=np.float64), k, n)[0])


def _assert_coverage_monotone(k: int, n: int) -> None:
    grid = np.minimum(
        np.arange(0.0, 1.0 + _MONOTONICITY_PROBE_STEP, _MONOTONICITY_PROBE_STEP), 1.0)
    values = _coverage_batch(grid, k, n)
    drops = np.nonzero(np.diff(values) < -1e-12)[0]
    if drops.size:
        raise ParameterError(
            f"coverage is not nondecreasing in theta_plus for k={k}, n={n} "
            f"near theta_plus={grid[drops[0]]}; inversion would be unsound")


def _isotonic_nondecreasing(values: np.ndarray) -> np.ndarray:
    """Pool adjacent violators, unweighted means."""
    levels = []
    counts = []
    for v in values:
        levels.append(float(v))
        counts.append(1)
        while len(levels) > 1 and levels[-2] > levels[-1]:
            v2, c2 = levels.pop(), counts.pop()
            v1, c1 = levels.pop(), counts.pop()
            levels.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    out = np.empty(len(values))
    pos = 0
    for v, c in zip(levels, counts):
        out[pos:pos + c] = v
        pos += c
    return out


def grid_min_p(k: int, n: int, delta: float, table: ThetaTable,
               reliable_cutoff: float = RELIABLE_P_CUTOFF) -> GridPrediction:
    """Minimum forwarding probability for a near-broadcast on a large grid.

    Bisects for the least theta_plus with coverage >= 1 - delta (coverage
    is checked to be nondecreasing rather than assumed), then inverts
    theta_plus -> p by piecewise-linear interpolation over the table's
    reliable rows, isotonic-cleaned. Raises SubcriticalError when the
    required theta_plus falls below what the supercritical rows can
    provide: the percolation analysis is simply invalid there.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must be in (0, 1), got {delta}")
    if k < 1 or n < k:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")

    usable = (~table.unreliable) & (table.p > reliable_cutoff)
    if not np.any(usable):
        raise SubcriticalError(
            f"theta table has no reliable rows above p={reliable_cutoff}")
    p_rows = table.p[usable]
    tp_rows = _isotonic_nondecreasing(table.theta_plus[usable])

    _assert_coverage_monotone(k, n)
    spec = MonotoneSearchSpec(
        lower=0.0, upper=1.0, target=1.0 - delta, tolerance=_COVERAGE_TOLERANCE,
        direction=SearchDirection.FIND_LEAST_ARG_WITH_F_AT_LEAST_TARGET)
    theta_plus_needed = bisect_monotone(
        lambda tp: grid_coverage(tp, k, n), spec)

    if theta_plus_needed > tp_rows[-1]:
        raise SubcriticalError(
            f"required theta_plus {theta_plus_needed:.6f} exceeds the table's "
            f"maximum {tp_rows[-1]:.6f}; extend the table toward p = 1")
    if theta_plus_needed < tp_rows[0]:
        raise SubcriticalError(
            f"required theta_plus {theta_plus_needed:.6f} is below the reliable "
            f"range (first reliable row has theta_plus {tp_rows[0]:.6f}): "
            "prediction below supercritical range")

    # Least p achieving the needed theta_plus: collapse isotonic flats to
    # their first (smallest-p) point, then interpolate.
    keep = np.concatenate(([True], np.diff(tp_rows) > 0))
    p_min = float(np.interp(theta_plus_needed, tp_rows[keep], p_rows[keep]))
    theta_at = theta_plus_needed * p_min
    return GridPrediction(
        p_min=p_min,
        tau_normalized=n * theta_at * theta_at / p_min,
        theta_at_pmin=theta_at,
        theta_plus_at_pmin=theta_plus_needed,
        reliable=p_min > reliable_cutoff,
    )


def single_packet_transmission_density(theta: float, p: float,
                                       reliable: bool = True) -> float:
    """Per-site expected transmissions of one packet: theta(p)^2 / p."""
    if not reliable:
        raise SubcriticalError(
            "transmission density requested on an unreliable (subcritical) row")
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"p must be in (0, 1], got {p}")
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must be in [0, 1], got {theta}")
    return theta * theta / p
