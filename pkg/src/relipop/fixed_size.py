"""Approximate counting of connected spanning subgraphs with exactly t edges.

Write N_t for that count and r_t = N_{t-1} / N_t. Starting from the exact
N_{m-1} (non-bridge edges), a ladder walks t downward: at each level it
samples connected subgraphs with edge weight r ~ r_{i+2} and reads off
r_{i+1} from the ratio of size-i to size-(i+1) samples.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .coupling import DisconnectedGraphError, sample_connected_batch
from .graph import UndirectedGraph, bridges, count_spanning_trees, is_connected
from .oracle import InstanceTooLarge, enumerate_rel
from .reliability import EstimateReport, EstimationError, _check_unit, _exact, amplification_runs
from .rng import as_generator, run_tasks


class LadderFailure(EstimationError):
    pass


@dataclass
class RatioLadder:
    t_target: int
    r_tilde: float
    n_tilde: float
    per_level: list[tuple[int, int, int, int]] = field(default_factory=list)
    r_history: list[float] = field(default_factory=list)
    popped: int = 0
    failure: str | None = None


def uniform_weight_graph(g: UndirectedGraph, r: float) -> UndirectedGraph:
    p = 1.0 / (1.0 + r)
    return UndirectedGraph(g.n, tuple(e._replace(p=p) for e in g.edges))


def sample_at_weight(g: UndirectedGraph, r: float, seed: int | np.random.Generator) -> frozenset[int]:
    """A connected subgraph R drawn with probability proportional to r^|R|."""
    if not r > 0:
        raise ValueError("weight must be positive")
    out, _, _ = sample_connected_batch(uniform_weight_graph(g, r), 1, as_generator(seed))
    return frozenset(np.flatnonzero(out[0]).tolist())


def sizes_at_weight(g: UndirectedGraph, r: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Edge counts of ``count`` draws at weight ``r``."""
    _, sizes, _ = sample_connected_batch(uniform_weight_graph(g, r), count, rng, keep=False)
    return sizes


def non_bridge_count(g: UndirectedGraph) -> int:
    return g.m - len(bridges(g))


def default_level_samples(m: int, t: int, epsilon: float) -> int:
    """Draws per ladder level: ceil(50 m^3 (m - t)^2 / eps^2)."""
    return math.ceil(50 * m**3 * (m - t) ** 2 / _exact(epsilon) ** 2)


def exact_count(g: UndirectedGraph, t: int) -> int | None:
    """N_t when one of the closed forms applies, else None."""
    if t == g.m:
        return 1
    if t == g.m - 1:
        return non_bridge_count(g)
    if t == g.n - 1:
        return count_spanning_trees(g)
    return None


def run_ladder(g: UndirectedGraph, t: int, samples: int, seed: int, run: int = 0) -> RatioLadder:
    """One pass of the ratio ladder; failures are recorded, not raised."""
    m = g.m
    r = float(non_bridge_count(g))
    ladder = RatioLadder(t, r, r)
    lo, hi = 1 / (2 * m), 2 * m
    for i in range(m - 2, t - 1, -1):
        if not lo <= ladder.r_tilde <= hi:
            ladder.failure = f"level {i}: ratio estimate {ladder.r_tilde!r} left [{lo!r}, {hi!r}]"
            return ladder
        weighted = uniform_weight_graph(g, ladder.r_tilde)
        _, sizes, stats = sample_connected_batch(weighted, samples, as_generator(seed, run, i), keep=False)
        ladder.popped += stats.popped_clusters
        at_i = int(np.count_nonzero(sizes == i))
        above = int(np.count_nonzero(sizes == i + 1))
        ladder.per_level.append((i, at_i, above, samples))
        if at_i == 0 or above == 0:
            ladder.failure = f"level {i}: no samples of size {i if at_i == 0 else i + 1}"
            return ladder
        ladder.r_tilde *= at_i / above
        ladder.r_history.append(ladder.r_tilde)
        ladder.n_tilde *= ladder.r_tilde
    return ladder


def estimate_fixed_size(
    g: UndirectedGraph,
    t: int,
    epsilon: float,
    delta: float,
    seed: int,
    samples_per_level: int | None = None,
    threads: int = 1,
) -> EstimateReport:
    """Approximate N_t; exact whenever t is m, m - 1 or n - 1."""
    if not is_connected(g):
        raise DisconnectedGraphError(f"{g.describe()} is disconnected")
    if not g.n - 1 <= t <= g.m:
        raise ValueError(f"t={t} outside [{g.n - 1}, {g.m}]")
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    exact = exact_count(g, t)
    if exact is not None:
        return EstimateReport(
            float(exact), math.log(exact), epsilon, delta, 0, [], 0, "exact closed form", runs=0, method="exact"
        )
    samples = samples_per_level or default_level_samples(g.m, t, epsilon)
    runs = amplification_runs(delta)
    ladders = run_tasks(run_ladder, [(g, t, samples, seed, k) for k in range(runs)], threads)
    values = [0.0 if lad.failure else lad.n_tilde for lad in ladders]
    failed = sum(1 for lad in ladders if lad.failure)
    median = statistics.median_low(values)
    chosen = ladders[values.index(median)]
    if median <= 0:
        raise LadderFailure(
            f"{failed} of {runs} ladder runs failed; first: {next(l.failure for l in ladders if l.failure)}",
            {"failed_runs": failed, "runs": runs, "failures": [l.failure for l in ladders if l.failure]},
        )
    levels = [list(x) for x in chosen.per_level]
    return EstimateReport(
        median, math.log(median), epsilon, delta, samples, chosen.r_history,
        sum(lad.popped for lad in ladders),
        f"ratio ladder t={t}; median of {runs} runs", runs=runs, method="ladder", failed_runs=failed,
        levels=levels,
    )


def check_log_concavity(g: UndirectedGraph) -> bool:
    """Whether the enumerated N_{t-1} N_{t+1} <= N_t^2 holds for n <= t <= m - 1."""
    if g.m > 20:
        raise InstanceTooLarge(f"{g.m} edges is too many to enumerate")
    counts = enumerate_rel(g).counts_by_size
    return all(
        counts.get(t - 1, 0) * counts.get(t + 1, 0) <= counts.get(t, 0) ** 2 for t in range(g.n, g.m)
    )
