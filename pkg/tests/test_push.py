"""Local push routines: traced examples, termination bounds, invariants."""

import math

import numpy as np
import pytest

import pushwalk as pw
from conftest import (forward_invariant_gap, rand_graph,
                      reverse_invariant_gap, two_cycle)


# ---------------------------------------------------------------- reverse

def test_reverse_threshold_one_returns_indicator():
    g = two_cycle()
    res = pw.reverse_push(g, 1, 1.0, 0.2)
    assert dict(res.estimates) == {}
    assert dict(res.residuals) == {1: 1.0}
    assert res.pushes_performed == 0


def test_reverse_single_push_trace():
    g = two_cycle()
    res = pw.reverse_push(g, 1, 0.9, 0.2)
    assert dict(res.estimates) == pytest.approx({1: 0.2})
    assert dict(res.residuals) == pytest.approx({0: 0.8})
    assert res.pushes_performed == 1


def test_reverse_small_threshold_brackets_oracle():
    edges = [(0, 1, 1.0), (1, 2, 0.6), (1, 3, 0.4), (2, 0, 1.0), (3, 3, 1.0)]
    g = pw.from_edges(edges, n=4)
    alpha, r_max, t = 0.2, 0.01, 2
    res = pw.reverse_push(g, t, r_max, alpha)
    assert res.residuals.max_value() <= r_max
    pim = pw.exact_ppr_matrix(g, alpha)
    for v in range(g.n):
        p = res.estimates.get(v, 0.0)
        assert p <= pim[v][t] + 1e-12
        assert pim[v][t] - p <= r_max + 1e-12


def test_reverse_push_count_bound(rng):
    for _ in range(5):
        g = rand_graph(rng, n_max=30, directed=True)
        t = int(rng.integers(g.n))
        r_max, alpha = 0.02, 0.2
        res = pw.reverse_push(g, t, r_max, alpha)
        pim = pw.exact_ppr_matrix(g, alpha)
        mass = pim[:, t].sum()
        assert res.pushes_performed <= mass / (alpha * r_max) + g.n


def test_reverse_self_loop_is_safe():
    g = pw.from_edges([(0, 0, 1.0)], n=1)
    res = pw.reverse_push(g, 0, 0.01, 0.2)
    assert res.estimates[0] >= 1 - 0.01
    assert res.residuals.max_value() <= 0.01


def test_reverse_invariant_random_graphs(rng):
    for _ in range(8):
        g = rand_graph(rng, n_max=30)
        t = int(rng.integers(g.n))
        r_max = float(rng.uniform(0.01, 0.5))
        res = pw.reverse_push(g, t, r_max, 0.2)
        pim = pw.exact_ppr_matrix(g, 0.2)
        gap = reverse_invariant_gap(g, t, res, pim, range(g.n))
        assert gap < 1e-10


# ---------------------------------------------------------------- forward

def test_forward_not_eligible_at_threshold():
    g = pw.from_edges([(0, 0, 1.0)], n=1)
    res = pw.forward_push(g, 0, 2.0, 0.2)
    assert dict(res.estimates) == {}
    assert dict(res.residuals) == {0: 1.0}


def test_forward_hub_spoke_eligibility_boundary():
    # s fans out to n-2 spokes which merge into t. Eligibility is strict
    # (r/d > r_max): at r_max = 1/(n-2) the source itself sits exactly on
    # the boundary and nothing fires; just below it, s pushes once and the
    # spokes (r/d = 0.8/(n-2)) still hold.
    n = 12
    spokes = list(range(1, n - 1))
    edges = [(0, v, 1.0) for v in spokes] + [(v, n - 1, 1.0) for v in spokes]
    g = pw.apply_sink_convention(pw.from_edges(edges, n=n))

    at_boundary = pw.forward_push(g, 0, 1.0 / (n - 2), 0.2)
    assert at_boundary.pushes_performed == 0
    assert dict(at_boundary.residuals) == {0: 1.0}

    below = pw.forward_push(g, 0, 0.9 / (n - 2), 0.2)
    assert below.pushes_performed == 1  # only s itself
    assert below.estimates.get(n - 1, 0.0) == 0.0
    assert dict(below.estimates) == pytest.approx({0: 0.2})
    assert dict(below.residuals) == pytest.approx(
        {v: 0.8 / (n - 2) for v in spokes})


def test_forward_self_loop_settles_geometrically():
    g = pw.from_edges([(0, 0, 1.0)], n=1)
    for r_max in (0.5, 0.1, 0.01):
        res = pw.forward_push(g, 0, r_max, 0.2)
        assert res.estimates[0] >= 1 - r_max


def test_forward_invariant_random_graphs(rng):
    for _ in range(8):
        g = rand_graph(rng, n_max=30)
        s = int(rng.integers(g.n))
        r_max = float(rng.uniform(0.01, 0.5))
        res = pw.forward_push(g, s, r_max, 0.2)
        pim = pw.exact_ppr_matrix(g, 0.2)
        gap = forward_invariant_gap(g, s, res, pim, range(g.n))
        assert gap < 1e-10


def test_forward_degree_sum_is_recorded(rng):
    g = rand_graph(rng, n_max=20, directed=False)
    res = pw.forward_push(g, 0, 0.05, 0.2)
    assert res.degree_sum > 0


# ---------------------------------------------------------------- balanced

def test_balanced_queue_empties_to_exact_answer():
    g = pw.apply_sink_convention(pw.from_edges([(0, 1, 1.0)], n=2))
    res = pw.reverse_push_balanced(g, 1, 0.2, delta=1e-4)
    assert res.achieved_rmax == 0.0
    pi = pw.exact_ppr(g, 0, 0.2)
    assert res.estimates.get(0, 0.0) == pytest.approx(pi[1], abs=1e-12)


def test_balanced_infinite_work_cost_stops_immediately():
    g = two_cycle()
    res = pw.reverse_push_balanced(g, 1, 0.2, delta=0.01,
                                   walk_time_constant=math.inf)
    assert dict(res.estimates) == {}
    assert dict(res.residuals) == {1: 1.0}
    assert res.achieved_rmax == 1.0


def test_balanced_work_constant_monotonicity(rng):
    g = rand_graph(rng, n_max=25, directed=True)
    t = int(rng.integers(g.n))
    small = pw.reverse_push_balanced(g, t, 0.2, delta=1e-3,
                                     walk_time_constant=0.01)
    large = pw.reverse_push_balanced(g, t, 0.2, delta=1e-3,
                                     walk_time_constant=100.0)
    assert small.achieved_rmax <= large.achieved_rmax


def test_balanced_residuals_bounded_by_achieved(rng):
    for _ in range(5):
        g = rand_graph(rng, n_max=25, directed=True)
        t = int(rng.integers(g.n))
        res = pw.reverse_push_balanced(g, t, 0.2, delta=1e-3)
        assert res.residuals.max_value() <= res.achieved_rmax + 1e-15
