"""Approximate reachability and all-terminal reliability.

The reachability of a bi-directed graph is written as a telescoping product
over a contraction sequence G_0, ..., G_{n-1}. Each factor is the chance
that a draw from the contracted graph, lifted back and completed with fresh
copies of the contracted arcs, is still root-connected. Single-shot
estimates are amplified by a median.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .coupling import DisconnectedGraphError
from .graph import (
    DirectedMultigraph,
    GraphError,
    UndirectedGraph,
    bidirect,
    contract_pair,
    count_arborescences,
    is_connected,
    is_root_connected,
)
from .popping import NotRootConnectedError, PoppingStats
from .rng import as_generator, run_tasks


class EstimationError(RuntimeError):
    """An estimator hit a branch that yields no usable estimate."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


@dataclass
class ContractionStep:
    before: DirectedMultigraph
    after: DirectedMultigraph
    pair: tuple[int, int]
    removed: list[int]
    arc_map: list[int]


@dataclass
class ContractionSequence:
    steps: list[ContractionStep]

    def __len__(self):
        return len(self.steps)


@dataclass
class EstimateReport:
    estimate: float
    log_estimate: float
    epsilon: float
    delta: float
    per_step_samples: int
    per_step_means: list[float]
    total_popped: int
    wall_notes: str = ""
    runs: int = 1
    method: str = "contraction"
    failed_runs: int = 0
    levels: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _exact(x: float) -> Fraction:
    # decimal reading keeps 0.1 from becoming 0.1000000000000000055...
    return Fraction(repr(float(x)))


def sample_count(p_max: float, n: int, epsilon: float) -> int:
    """Per-step draws ceil(5 (1 - p_max)^-2 (n - 1) eps^-2)."""
    value = 5 * (n - 1) / ((1 - _exact(p_max)) ** 2 * _exact(epsilon) ** 2)
    return math.ceil(value)


def amplification_runs(delta: float) -> int:
    """Independent single-shot runs whose median has failure rate <= delta.

    A single run already fails with probability at most 1/4.
    """
    if delta >= 0.25:
        return 1
    return math.ceil(8 * math.log(1 / delta))


def _check_unit(name: str, x: float) -> None:
    if not 0 < x < 1:
        raise ValueError(f"{name} must lie in (0,1), got {x}")


def build_contraction_sequence(g: DirectedMultigraph) -> ContractionSequence:
    """Contract the lexicographically smallest adjacent pair until one vertex is left."""
    if not is_root_connected(g):
        raise NotRootConnectedError(f"{g.describe()} is not root-connected")
    steps = []
    cur = g
    while cur.n > 1:
        u, v = min((min(a.tail, a.head), max(a.tail, a.head)) for a in cur.arcs)
        nxt, removed, arc_map = contract_pair(cur, u, v)
        steps.append(ContractionStep(cur, nxt, (u, v), removed, arc_map))
        cur = nxt
    return ContractionSequence(steps)


def _ratio_hits(step: ContractionStep, count: int, rng: np.random.Generator) -> tuple[int, PoppingStats]:
    a = step.after.arrays
    b = step.before.arrays
    lift = np.empty(step.after.m, dtype=np.int64)
    for old, new in enumerate(step.arc_map):
        if new >= 0:
            lift[new] = old
    removed = np.array(step.removed, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    hits = _kernels.ratio_hits(
        a.n, a.root, a.tails, a.heads, a.q, a.out_ptr, a.out_arc, a.in_ptr, a.in_arc,
        b.n, b.root, b.tails, b.q, b.in_ptr, b.in_arc,
        lift, removed, count, rng, stats,
    )
    return int(hits), PoppingStats.from_array(stats)


def estimate_ratio(step: ContractionStep, samples: int, seed: int | np.random.Generator) -> float:
    """Empirical mean of the root-connectivity indicator for one contraction."""
    if samples < 1:
        raise ValueError("need at least one sample")
    hits, _ = _ratio_hits(step, samples, as_generator(seed))
    return hits / samples


def _single_shot(seq: ContractionSequence, samples: int, seed: int, run: int):
    means = []
    popped = 0
    for i, step in enumerate(seq.steps):
        hits, stats = _ratio_hits(step, samples, as_generator(seed, run, i))
        popped += stats.popped_clusters
        means.append(hits / samples)
        if hits == 0:
            return None, means, popped, i
    return math.fsum(math.log(x) for x in means), means, popped, None


def _check_bidirected(g: DirectedMultigraph) -> None:
    if not g.is_bidirected:
        raise GraphError("estimator needs a bi-directed graph (every arc paired with an equal-probability reverse)")


def estimate_reach(
    g: DirectedMultigraph,
    epsilon: float,
    delta: float,
    seed: int,
    threads: int = 1,
    notes: str = "",
) -> EstimateReport:
    """(1 +- eps)-approximation of the reachability with confidence 1 - delta."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    _check_bidirected(g)
    seq = build_contraction_sequence(g)
    runs = amplification_runs(delta)
    if len(seq) == 0:
        return EstimateReport(1.0, 0.0, epsilon, delta, 0, [], 0, notes or "single vertex", runs=0)
    p_max = max(a.p for a in g.arcs)
    s = sample_count(p_max, g.n, epsilon)
    results = run_tasks(_single_shot, [(seq, s, seed, r) for r in range(runs)], threads)
    popped = sum(r[2] for r in results)
    for run, (log_est, means, _, step) in enumerate(results):
        if log_est is None:
            raise EstimationError(
                f"run {run}: step {step} produced no root-connected lift in {s} draws",
                {"run": run, "step": step, "per_step_samples": s, "per_step_means": means},
            )
    logs = [r[0] for r in results]
    chosen = logs.index(statistics.median_low(logs))
    log_est = logs[chosen]
    text = f"p_max={p_max!r}; (1-p_max)^-3={(1 - p_max) ** -3:.6g}; median of {runs} runs"
    if notes:
        text = notes + "; " + text
    return EstimateReport(
        math.exp(log_est), log_est, epsilon, delta, s, results[chosen][1], popped, text, runs=runs
    )


def estimate_reliability(
    g: UndirectedGraph, epsilon: float, delta: float, seed: int, threads: int = 1
) -> EstimateReport:
    """All-terminal reliability via reachability of the bi-directed lift rooted at 0."""
    if not is_connected(g):
        raise DisconnectedGraphError(f"{g.describe()} is disconnected")
    h = bidirect(g, 0)
    return estimate_reach(h, epsilon, delta, seed, threads, notes=f"m counts arcs of the bi-directed lift (m={h.m})")


# ------------------------------------------------- high failure probability


def uniform_failure(g: DirectedMultigraph) -> float:
    ps = {a.p for a in g.arcs}
    if len(ps) != 1:
        raise GraphError("high-p path needs a uniform failure probability")
    return ps.pop()


def p_star(m: int) -> float:
    return 1 - 1 / (3 * m)


def _highp_setup(g: DirectedMultigraph, p: float | None):
    _check_bidirected(g)
    if g.m == 0:
        raise GraphError("graph has no arcs")
    if not is_root_connected(g):
        raise NotRootConnectedError(f"{g.describe()} is not root-connected")
    if p is None:
        p = uniform_failure(g)
    ps = p_star(g.m)
    if not p > ps:
        raise ValueError(f"p={p} does not exceed p*={ps}")
    keep = ps * (1 - p) / (p * (1 - ps))
    return p, ps, keep


def highp_batch(g: DirectedMultigraph, count: int, rng: np.random.Generator, p: float | None = None):
    """``count`` exact draws at uniform failure ``p > p*``.

    Returns (boolean sample matrix, candidates drawn, stats).
    """
    p, ps, keep = _highp_setup(g, p)
    a = g.arrays
    q_star = np.full(g.m, 1 - ps)
    out = np.zeros((count, g.m), dtype=np.bool_)
    stats = np.zeros(3, dtype=np.int64)
    attempts = _kernels.highp_batch(
        a.n, a.root, a.tails, a.heads, q_star, a.out_ptr, a.out_arc, a.in_ptr, a.in_arc,
        keep, count, rng, out, stats,
    )
    return out, int(attempts), PoppingStats.from_array(stats)


def highp_sample(g: DirectedMultigraph, seed: int | np.random.Generator, p: float | None = None) -> frozenset[int]:
    out, _, _ = highp_batch(g, 1, as_generator(seed), p)
    return frozenset(np.flatnonzero(out[0]).tolist())


def highp_estimate(
    g: DirectedMultigraph, epsilon: float, delta: float, seed: int, p: float | None = None
) -> EstimateReport:
    """Plug-in estimate A (1-p)^(n-1) p^(m-n+1) / q_hat.

    A is the exact arborescence count and q_hat the observed share of
    draws that are arborescences.
    """
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    p, _, _ = _highp_setup(g, p)
    draws = math.ceil(12 * math.log(4 / delta) / _exact(epsilon) ** 2)
    out, attempts, stats = highp_batch(g, draws, as_generator(seed, 0), p)
    trees = int(np.count_nonzero(out.sum(axis=1) == g.n - 1))
    if trees == 0:
        raise EstimationError(f"no arborescence among {draws} draws", {"draws": draws})
    q_hat = trees / draws
    arbs = count_arborescences(g)
    log_est = (
        math.log(arbs) + (g.n - 1) * math.log(1 - p) + (g.m - g.n + 1) * math.log(p) - math.log(q_hat)
    )
    notes = f"derived plug-in estimator A/q_hat; A={arbs}; acceptance rate={draws / attempts:.6f}"
    return EstimateReport(
        math.exp(log_est), log_est, epsilon, delta, draws, [q_hat], stats.popped_clusters, notes,
        method="high-p",
    )
