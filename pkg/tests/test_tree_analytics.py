import math

import numpy as np
import pytest

from probfwd.errors import ParameterError, UndecodableError
from probfwd.numerics import binomial_cdf
from probfwd.tree_analytics import (
    TreeProtocolParams,
    min_p_lower_bound,
    min_p_upper_bound,
    sweep_rows,
    tree_failure_fraction,
    tree_min_p,
    tree_tau,
)


def params(H=2, k=1, n=1, delta=0.5, p=0.0, d=2):
    return TreeProtocolParams(height=H, data_packets=k, coded_packets=n,
                              delta=delta, forward_prob=p, arity=d)


def failure_by_levels(H, d, k, n, p):
    """Direct (non log-space) evaluation of the level sum, as an oracle."""
    total_nodes = (d ** (H + 1) - 1) / (d - 1)
    return sum(d ** (l + 1) * binomial_cdf(k - 1, n, p**l) for l in range(H)) / total_nodes


class TestFailureFraction:
    def test_silent_network_reaches_only_children(self):
        assert tree_failure_fraction(params(p=0.0)) == pytest.approx(4 / 7, abs=1e-15)

    def test_hand_evaluated_half(self):
        assert tree_failure_fraction(params(p=0.5)) == pytest.approx(2 / 7, abs=1e-15)

    @pytest.mark.parametrize("H,k,n,d", [(2, 1, 1, 2), (5, 3, 7, 2), (3, 2, 2, 3)])
    def test_certain_forwarding_never_fails(self, H, k, n, d):
        assert tree_failure_fraction(params(H=H, k=k, n=n, p=1.0, d=d)) == 0.0

    @pytest.mark.parametrize("p", [0.0, 0.2, 0.55, 0.9])
    def test_matches_direct_level_sum(self, p):
        got = tree_failure_fraction(params(H=6, k=3, n=8, p=p))
        assert got == pytest.approx(failure_by_levels(6, 2, 3, 8, p), rel=1e-12)

    def test_monotone_nonincreasing_in_p(self):
        values = [tree_failure_fraction(params(H=5, k=2, n=6, p=p))
                  for p in np.linspace(0, 1, 21)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("H,d", [(2, 2), (5, 2), (3, 4)])
    def test_level_weights_sum_with_root_to_whole_tree(self, H, d):
        # at p=0 every level above the children fails outright, so the value
        # exposes the level weights: (N - 1 - d) / N
        total_nodes = (d ** (H + 1) - 1) // (d - 1)
        expect = (total_nodes - 1 - d) / total_nodes
        got = tree_failure_fraction(params(H=H, k=1, n=2, p=0.0, d=d))
        assert got == pytest.approx(expect, rel=1e-12)

    def test_undecodable_rejected(self):
        with pytest.raises(UndecodableError):
            params(k=5, n=4)


class TestMinP:
    def test_single_packet_closed_form(self):
        # failure reduces to 4(1-p)/7 <= delta, so p* = 1 - 7*delta/4
        assert tree_min_p(params(delta=0.5)) == pytest.approx(0.125, abs=1e-9)

    def test_matches_linear_scan(self):
        step = 1e-4
        pr = params(H=4, k=2, n=6, delta=0.15)
        grid = np.arange(0.0, 1.0 + step / 2, step)
        scan = next(p for p in grid
                    if tree_failure_fraction(params(H=4, k=2, n=6, delta=0.15, p=p)) <= 0.15)
        assert abs(tree_min_p(pr) - scan) <= step

    def test_headline_parameters_frozen_value(self):
        p_star = tree_min_p(params(H=50, k=100, n=200, delta=0.1))
        assert p_star == pytest.approx(0.9874012984428191, abs=5e-9)
        assert 0.98575 < p_star < 0.98933

    def test_sandwiched_by_bounds(self):
        for n in (100, 250, 700):
            p_star = tree_min_p(params(H=50, k=100, n=n, delta=0.1))
            assert min_p_lower_bound(50, 100, n) < p_star <= min_p_upper_bound(50, 100, n, 0.1)

    def test_all_k_of_k_with_tiny_delta_stays_above_lower_bound(self):
        p_star = tree_min_p(params(H=2, k=3, n=3, delta=1e-6))
        assert p_star > 0.999
        assert p_star >= min_p_lower_bound(2, 3, 3)

    def test_nonincreasing_in_n(self):
        values = [tree_min_p(params(H=8, k=10, n=n, delta=0.1))
                  for n in range(10, 201, 10)]
        assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    def test_large_n_decays_below_small_n_lower_bound(self):
        # redundancy growth drives the minimum probability toward zero
        k = 3
        assert (tree_min_p(params(H=6, k=k, n=1000 * k, delta=0.1))
                < min_p_lower_bound(6, k, k))

    def test_trivial_target_returns_zero(self):
        # delta larger than the silent-network failure fraction
        assert tree_min_p(params(H=2, k=1, n=1, delta=0.99)) in (0.0,)


class TestBounds:
    def test_lower_bound_values(self):
        assert min_p_lower_bound(50, 100, 200) == pytest.approx((99 / 200) ** (1 / 49), rel=1e-15)
        assert min_p_lower_bound(50, 100, 200) == pytest.approx(0.9857515146076918, abs=1e-15)
        assert min_p_lower_bound(2, 2, 4) == pytest.approx(0.25, abs=1e-15)
        assert min_p_lower_bound(3, 1, 100) == pytest.approx(0.1, abs=1e-15)
        assert min_p_lower_bound(5, 1, 1) == 0.0

    def test_upper_bound_headline_value(self):
        # delta' = min{0.1 * (2^51-1)/(2^51-2), 1}; t = sqrt(2*99*(-ln d') + ln^2 d') - ln d'
        assert min_p_upper_bound(50, 100, 200, 0.1) == pytest.approx(0.990091544612511, abs=1e-12)

    def test_upper_bound_degenerate_delta_one(self):
        # delta' = 1 makes -ln delta' = 0, so the k=1 bound collapses to 0
        assert min_p_upper_bound(2, 1, 1, 1.0) == 0.0

    def test_upper_bound_clamps_to_one(self):
        # k-1+t exceeds n: the bound saturates
        assert min_p_upper_bound(2, 5, 5, 0.01) == 1.0

    def test_slack_term_is_nonnegative(self):
        for delta in (1e-9, 0.05, 0.5, 1.0):
            for k in (1, 2, 10):
                ub = min_p_upper_bound(10, k, 50, delta)
                assert 0.0 <= ub <= 1.0

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            min_p_lower_bound(1, 2, 4)
        with pytest.raises(ParameterError):
            min_p_upper_bound(10, 2, 4, 0.0)
        with pytest.raises(ParameterError):
            min_p_upper_bound(10, 2, 4, 1.5)


class TestTau:
    def test_certain_forwarding(self):
        assert tree_tau(2, 2, 3, 1.0) == pytest.approx(9.0, abs=1e-12)

    def test_removable_singularity(self):
        assert tree_tau(2, 2, 1, 0.5) == pytest.approx(2.0, abs=1e-12)
        assert tree_tau(10, 2, 7, 0.5) == pytest.approx(70.0, abs=1e-12)

    def test_series_window_is_smooth(self):
        # approaching dp = 1 from both sides stays continuous
        base = tree_tau(12, 2, 5, 0.5)
        for eps in (1e-12, 1e-9, 1e-7):
            assert tree_tau(12, 2, 5, 0.5 + eps) == pytest.approx(base, rel=1e-5)
            assert tree_tau(12, 2, 5, 0.5 - eps) == pytest.approx(base, rel=1e-5)

    def test_zero_probability_counts_root_only(self):
        assert tree_tau(5, 2, 4, 0.0) == pytest.approx(4.0, abs=1e-12)

    def test_increasing_in_n_at_min_p(self):
        k, delta, H = 5, 0.1, 10
        taus = []
        for n in range(k, 10 * k + 1, 5):
            p = tree_min_p(params(H=H, k=k, n=n, delta=delta))
            taus.append(tree_tau(H, 2, n, p))
        assert all(a < b for a, b in zip(taus, taus[1:]))


def test_sweep_rows_shape_and_sandwich():
    rows = sweep_rows(10, 5, 0.1, range(5, 26, 5))
    assert [r[0] for r in rows] == [5, 10, 15, 20, 25]
    for n, p_min, lower, upper, tau in rows:
        assert lower < p_min <= upper
        assert tau > 0
