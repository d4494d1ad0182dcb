import math

import pytest

from helpers import brute_connected_counts, complete, cycle, path, undirected
from relipop.graph import DirectedMultigraph, bidirect
from relipop.oracle import (
    InstanceTooLarge,
    empirical_distribution,
    enumerate_reach,
    enumerate_rel,
    gray_subsets,
    tv_distance,
)


def test_pair():
    res = enumerate_reach(bidirect(undirected(2, [(0, 1)]), 0))
    assert res.z == pytest.approx(0.5, abs=1e-12)
    assert res.z_k(1) == pytest.approx(0.5, abs=1e-12)
    assert res.z_k(2) == 0.0


def test_single_vertex():
    res = enumerate_reach(DirectedMultigraph(1, 0, ()))
    assert res.z == 1.0
    assert res.distribution == {frozenset(): 1.0}


def test_k3_reach():
    res = enumerate_reach(bidirect(complete(3), 0))
    assert res.z == pytest.approx(0.5, abs=1e-12)
    assert len(res.distribution) == 32
    assert res.expected_pops == pytest.approx(0.875, abs=1e-12)


def test_k3_rel():
    res = enumerate_rel(complete(3))
    assert res.z == pytest.approx(0.5, abs=1e-12)
    assert res.counts_by_size == {2: 3, 3: 1}
    assert len(res.distribution) == 4


def test_single_edge_rel():
    assert enumerate_rel(undirected(2, [(0, 1)], 0.3)).z == pytest.approx(0.7, abs=1e-12)


def test_k4_counts():
    assert enumerate_rel(complete(4)).counts_by_size == {3: 16, 4: 15, 5: 6, 6: 1}


@pytest.mark.parametrize("g", [complete(4), cycle(5), path(4), complete(5)], ids=["k4", "c5", "p4", "k5"])
def test_counts_match_independent_brute_force(g):
    assert enumerate_rel(g).counts_by_size == brute_connected_counts(g)


@pytest.mark.parametrize(
    "g", [complete(3, 0.3), cycle(4, [0.1, 0.5, 0.8, 0.3]), complete(4, 0.6)], ids=["k3", "c4", "k4"]
)
def test_cluster_masses_sum_to_one(g):
    res = enumerate_reach(bidirect(g, 0))
    assert abs(math.fsum(res.z_k(k) for k in res.z_by_cluster_count) - 1) < 1e-10
    assert abs(math.fsum(res.distribution.values()) - 1) < 1e-10


def test_gray_code_weights_are_exact():
    ps = [0.1, 0.35, 0.5, 0.77, 0.9]
    seen = {}
    for mask, lw in gray_subsets(ps):
        direct = sum(math.log(1 - p) if mask >> i & 1 else math.log(p) for i, p in enumerate(ps))
        assert abs(lw - direct) < 1e-12
        seen[mask] = lw
    assert len(seen) == 32


def test_too_large():
    with pytest.raises(InstanceTooLarge):
        enumerate_rel(complete(8))


def test_tv_distance():
    a = {"x": 0.6, "y": 0.4}
    assert tv_distance(a, a) == 0
    assert tv_distance({"x": 1.0}, {"y": 1.0}) == 1
    assert tv_distance(a, {"x": 0.5, "y": 0.5}) == pytest.approx(0.1, abs=1e-15)


def test_empirical_distribution():
    emp = empirical_distribution([{1}, {1}, {2}, set()])
    assert emp == {frozenset({1}): 0.5, frozenset({2}): 0.25, frozenset(): 0.25}
