import math
from fractions import Fraction

import numpy as np
import pytest

from helpers import brute_connected_counts, brute_spanning_trees, complete, cycle, path, undirected
from relipop.coupling import DisconnectedGraphError
from relipop.fixed_size import (
    LadderFailure,
    check_log_concavity,
    default_level_samples,
    estimate_fixed_size,
    exact_count,
    non_bridge_count,
    run_ladder,
    sample_at_weight,
    sizes_at_weight,
)
from relipop.oracle import InstanceTooLarge
from relipop.rng import as_generator

TEST_GRAPHS = {
    "k4": complete(4),
    "k5": complete(5),
    "c5": cycle(5),
    "path4": path(4),
    "lollipop": undirected(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]),
    "multi": undirected(3, [(0, 1), (0, 1), (1, 2), (0, 2), (1, 2)]),
    "theta": undirected(4, [(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]),
}


@pytest.mark.parametrize("name", sorted(TEST_GRAPHS))
def test_exact_paths_match_brute_force(name):
    g = TEST_GRAPHS[name]
    counts = brute_connected_counts(g)
    for t in {g.m, g.m - 1, g.n - 1} & set(range(g.n - 1, g.m + 1)):
        rep = estimate_fixed_size(g, t, 0.2, 0.05, seed=0)
        assert rep.method == "exact"
        assert rep.estimate == counts.get(t, 0)
    assert exact_count(g, g.n - 1) == brute_spanning_trees(g)


def test_k4_closed_forms():
    g = complete(4)
    assert exact_count(g, 6) == 1
    assert exact_count(g, 5) == non_bridge_count(g) == 6
    assert exact_count(g, 3) == 16
    assert exact_count(g, 4) is None


def test_tree_has_one_spanning_subgraph():
    g = path(5)
    assert estimate_fixed_size(g, 4, 0.1, 0.1, seed=1).estimate == 1
    assert non_bridge_count(g) == 0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        estimate_fixed_size(complete(4), 2, 0.2, 0.2, 0)
    with pytest.raises(ValueError):
        estimate_fixed_size(complete(4), 7, 0.2, 0.2, 0)
    with pytest.raises(DisconnectedGraphError):
        estimate_fixed_size(undirected(4, [(0, 1), (2, 3)]), 3, 0.2, 0.2, 0)


def test_default_level_samples():
    assert default_level_samples(6, 4, 0.2) == math.ceil(50 * 216 * 4 / Fraction(1, 25))


def test_weight_sampler_k3_uniform():
    rng = as_generator(2)
    counts = {}
    for _ in range(8000):
        s = sample_at_weight(complete(3), 1.0, rng)
        counts[s] = counts.get(s, 0) + 1
    assert len(counts) == 4
    assert all(abs(c / 8000 - 0.25) < 0.025 for c in counts.values())


def test_weight_sampler_single_edge_large_r():
    g = undirected(2, [(0, 1)])
    assert all(sample_at_weight(g, 1e6, s) == {0} for s in range(5))


def test_k4_size_three_mass():
    sizes = sizes_at_weight(complete(4), 1.0, 60_000, as_generator(8))
    share = np.count_nonzero(sizes == 3) / len(sizes)
    assert abs(share - 16 / 38) < 4 * math.sqrt((16 / 38) * (22 / 38) / 60_000)


@pytest.mark.parametrize("name", sorted(TEST_GRAPHS))
def test_log_concavity(name):
    assert check_log_concavity(TEST_GRAPHS[name])


def test_log_concavity_size_cap():
    with pytest.raises(InstanceTooLarge):
        check_log_concavity(complete(7))


def _exact_ratios(g):
    counts = brute_connected_counts(g)
    return counts, {t: Fraction(counts[t - 1], counts[t]) for t in range(g.n, g.m + 1)}


@pytest.mark.parametrize("name", ["k4", "k5"])
def test_equal_masses_at_exact_ratio(name):
    g = TEST_GRAPHS[name]
    counts, ratios = _exact_ratios(g)
    for t, r in ratios.items():
        r = float(r)
        masses = {k: c * r**k for k, c in counts.items()}
        total = math.fsum(masses.values())
        assert abs(masses[t - 1] / total - masses[t] / total) <= 1e-10
        assert masses[t] / total >= 1 / g.m


@pytest.mark.parametrize("name", ["k4", "k5", "c5", "theta", "multi"])
def test_ratios_monotone_and_bounded(name):
    g = TEST_GRAPHS[name]
    _, ratios = _exact_ratios(g)
    seq = [ratios[t] for t in sorted(ratios)]
    assert all(a <= b for a, b in zip(seq, seq[1:]))
    assert all(Fraction(1, g.m) <= r <= g.m for r in seq)


def test_ladder_k4_t4():
    ladder = run_ladder(complete(4), 4, 4000, seed=3)
    assert ladder.failure is None
    assert abs(ladder.n_tilde - 15) / 15 < 0.2
    # the first level estimates r_5 = N_4 / N_5 = 15 / 6
    assert abs(ladder.r_history[0] - 2.5) / 2.5 < 0.2
    assert [lv[0] for lv in ladder.per_level] == [4]


def test_ladder_k5_t6():
    rep = estimate_fixed_size(complete(5), 6, 0.2, 0.25, seed=4, samples_per_level=4000)
    exact = brute_connected_counts(complete(5))[6]
    assert abs(rep.estimate - exact) / exact < 0.2
    assert rep.method == "ladder"
    assert [lv[0] for lv in rep.levels] == [8, 7, 6]


def test_ladder_failure_raises():
    # one draw per level cannot see both sizes
    with pytest.raises(LadderFailure) as info:
        estimate_fixed_size(complete(5), 5, 0.2, 0.25, seed=1, samples_per_level=1)
    assert info.value.details["failed_runs"] == 1


def test_ladder_reproducible():
    a = estimate_fixed_size(complete(4), 4, 0.2, 0.1, seed=9, samples_per_level=500)
    b = estimate_fixed_size(complete(4), 4, 0.2, 0.1, seed=9, samples_per_level=500, threads=2)
    assert a.to_dict() == b.to_dict()
