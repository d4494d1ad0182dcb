"""Brute-force ground truth for small instances.

Subsets are visited in Gray-code order so the log weight changes by one
term per step. Everything here is exponential in the number of arcs/edges
and refuses instances above :data:`MAX_ELEMENTS`.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .graph import DirectedMultigraph, UndirectedGraph, is_connected, logsumexp
from .popping import find_minimal_clusters

MAX_ELEMENTS = 24


class InstanceTooLarge(ValueError):
    pass


@dataclass
class EnumerationResult:
    """Exact quantities from a full subset enumeration.

    ``z_by_cluster_count`` maps k to ln Z_k (total weight of subsets with k
    minimal clusters). For undirected graphs key 0 is the connected mass and
    key 1 the disconnected mass. ``distribution`` is the normalised
    probability of every subset in the support (root-connected or connected).
    """

    z_by_cluster_count: dict[int, float]
    distribution: dict[frozenset[int], float]
    counts_by_size: dict[int, int] = field(default_factory=dict)

    @property
    def log_z(self) -> float:
        return self.z_by_cluster_count.get(0, -math.inf)

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    def z_k(self, k: int) -> float:
        return math.exp(self.z_by_cluster_count.get(k, -math.inf))

    @property
    def expected_pops(self) -> float:
        """Z_1 / Z_0, the mean number of popped clusters."""
        return self.z_k(1) / self.z


def gray_subsets(fail_probs) -> Iterator[tuple[int, float]]:
    """Yield (bitmask, log weight) for every subset in Gray-code order."""
    m = len(fail_probs)
    if m > MAX_ELEMENTS:
        raise InstanceTooLarge(f"instance too large for enumeration: {m} > {MAX_ELEMENTS} elements")
    log_in = [math.log(1 - p) if p < 1 else -math.inf for p in fail_probs]
    log_out = [math.log(p) if p > 0 else -math.inf for p in fail_probs]
    finite = all(0 < p < 1 for p in fail_probs)
    terms = list(log_out)
    lw = math.fsum(terms)
    mask = 0
    yield mask, lw
    for i in range(1, 1 << m):
        bit = (i & -i).bit_length() - 1
        mask ^= 1 << bit
        added = mask >> bit & 1
        if finite:
            lw += log_in[bit] - log_out[bit] if added else log_out[bit] - log_in[bit]
        else:
            terms[bit] = log_in[bit] if added else log_out[bit]
            lw = sum(terms)
        yield mask, lw


def mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def enumerate_reach(g: DirectedMultigraph) -> EnumerationResult:
    by_k: dict[int, list[float]] = defaultdict(list)
    support: dict[frozenset[int], float] = {}
    for mask, lw in gray_subsets(g.fail_probs):
        s = mask_to_set(mask)
        k = len(find_minimal_clusters(g, s).clusters)
        by_k[k].append(lw)
        if k == 0:
            support[s] = lw
    z = {k: logsumexp(v) for k, v in sorted(by_k.items())}
    dist = {s: math.exp(lw - z[0]) for s, lw in support.items()} if 0 in z else {}
    sizes: dict[int, int] = defaultdict(int)
    for s in support:
        sizes[len(s)] += 1
    return EnumerationResult(z, dist, dict(sorted(sizes.items())))


def enumerate_rel(g: UndirectedGraph) -> EnumerationResult:
    connected: dict[frozenset[int], float] = {}
    rest: list[float] = []
    sizes: dict[int, int] = defaultdict(int)
    for mask, lw in gray_subsets(g.fail_probs):
        s = mask_to_set(mask)
        if is_connected(g, s):
            connected[s] = lw
            sizes[len(s)] += 1
        else:
            rest.append(lw)
    z = {0: logsumexp(connected.values()), 1: logsumexp(rest)}
    dist = {s: math.exp(lw - z[0]) for s, lw in connected.items()}
    return EnumerationResult(z, dist, dict(sorted(sizes.items())))


def tv_distance(empirical: Mapping, exact: Mapping) -> float:
    keys = set(empirical) | set(exact)
    return 0.5 * math.fsum(abs(empirical.get(k, 0.0) - exact.get(k, 0.0)) for k in keys)


def empirical_distribution(samples) -> dict[frozenset[int], float]:
    """Relative frequency of each distinct subset in an iterable of subsets."""
    counts: dict[frozenset[int], int] = defaultdict(int)
    total = 0
    for s in samples:
        counts[frozenset(s)] += 1
        total += 1
    return {s: c / total for s, c in counts.items()}
