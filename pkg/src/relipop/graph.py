"""Graph data model: parsing, bi-directed lifting, contraction, SCCs and
exact tree counting.

Vertex ids are dense 0-based integers. Arc and edge ids are positions in
the graph's ``arcs`` / ``edges`` tuple, fixed at construction time.
Subsets of arcs or edges are plain Python sets of those ids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import AbstractSet, Iterable, NamedTuple, Sequence

import numpy as np

ArcSubset = AbstractSet[int]
EdgeSubset = AbstractSet[int]


class GraphFormatError(ValueError):
    """Malformed graph text. Carries 1-based line/column of the problem."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class GraphError(ValueError):
    """Invalid argument for a graph operation."""


class Arc(NamedTuple):
    tail: int
    head: int
    p: float


class Edge(NamedTuple):
    u: int
    v: int
    p: float


def _check_prob(p: float, allow_boundary: bool) -> bool:
    if allow_boundary:
        return 0.0 <= p <= 1.0
    return 0.0 < p < 1.0


@dataclass(frozen=True, eq=False)
class DirectedMultigraph:
    """Rooted directed multigraph with per-arc failure probabilities.

    ``twin`` optionally pairs every arc with an anti-parallel arc of equal
    failure probability; it is present exactly when the graph is bi-directed.
    """

    n: int
    root: int
    arcs: tuple[Arc, ...]
    twin: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("vertex count must be positive")
        if not 0 <= self.root < self.n:
            raise GraphError(f"root {self.root} is not a vertex")
        for i, (t, h, p) in enumerate(self.arcs):
            if not (0 <= t < self.n and 0 <= h < self.n):
                raise GraphError(f"arc {i} has an endpoint outside 0..{self.n - 1}")
            if t == h:
                raise GraphError(f"arc {i} is a self-loop")
            if not 0.0 <= p <= 1.0:
                raise GraphError(f"arc {i} has failure probability {p} outside [0,1]")
        if self.twin is not None:
            if len(self.twin) != len(self.arcs):
                raise GraphError("twin map must cover every arc")
            for e, f in enumerate(self.twin):
                a, b = self.arcs[e], self.arcs[f]
                if self.twin[f] != e or e == f:
                    raise GraphError(f"twin map is not an involution at arc {e}")
                if (a.tail, a.head) != (b.head, b.tail) or a.p != b.p:
                    raise GraphError(f"arc {e} and its twin {f} are not anti-parallel with equal p")

    @property
    def m(self) -> int:
        return len(self.arcs)

    @property
    def fail_probs(self) -> tuple[float, ...]:
        return tuple(a.p for a in self.arcs)

    @property
    def is_bidirected(self) -> bool:
        return self.twin is not None or self.m == 0

    def edge_of_arc(self) -> list[int]:
        """Index of the underlying undirected edge for every arc.

        Twin pairs are numbered by their smaller arc id, which reproduces
        the edge ids of the graph that :func:`bidirect` lifted.
        """
        if self.twin is None:
            raise GraphError("graph has no twin map")
        edge = [-1] * self.m
        k = 0
        for e in range(self.m):
            if edge[e] < 0:
                edge[e] = edge[self.twin[e]] = k
                k += 1
        return edge

    def describe(self) -> str:
        return f"digraph(n={self.n}, m={self.m}, root={self.root})"

    @cached_property
    def arrays(self) -> "GraphArrays":
        return GraphArrays.build(self)


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("vertex count must be positive")
        for i, (u, v, p) in enumerate(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {i} has an endpoint outside 0..{self.n - 1}")
            if u == v:
                raise GraphError(f"edge {i} is a self-loop")
            if not 0.0 <= p <= 1.0:
                raise GraphError(f"edge {i} has failure probability {p} outside [0,1]")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def fail_probs(self) -> tuple[float, ...]:
        return tuple(e.p for e in self.edges)

    def describe(self) -> str:
        return f"undirected(n={self.n}, m={self.m})"


class GraphArrays(NamedTuple):
    """Flat numpy view of a digraph used by the compiled kernels."""

    n: int
    root: int
    tails: np.ndarray
    heads: np.ndarray
    q: np.ndarray  # presence probability 1 - p
    out_ptr: np.ndarray
    out_arc: np.ndarray
    in_ptr: np.ndarray
    in_arc: np.ndarray

    @classmethod
    def build(cls, g: DirectedMultigraph) -> "GraphArrays":
        tails = np.array([a.tail for a in g.arcs], dtype=np.int64)
        heads = np.array([a.head for a in g.arcs], dtype=np.int64)
        q = np.array([1.0 - a.p for a in g.arcs], dtype=np.float64)
        out_ptr, out_arc = _csr(g.n, tails)
        in_ptr, in_arc = _csr(g.n, heads)
        return cls(g.n, g.root, tails, heads, q, out_ptr, out_arc, in_ptr, in_arc)


def _csr(n: int, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable").astype(np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return ptr, order


# ---------------------------------------------------------------- parsing


def pair_twins(arcs: Sequence[Arc]) -> tuple[int, ...] | None:
    """Greedily pair anti-parallel arcs with equal probability.

    Returns None when some arc is left without a partner.
    """
    waiting: dict[tuple[int, int, float], list[int]] = {}
    twin = [-1] * len(arcs)
    for e, (t, h, p) in enumerate(arcs):
        partners = waiting.get((h, t, p))
        if partners:
            f = partners.pop(0)
            twin[e], twin[f] = f, e
        else:
            waiting.setdefault((t, h, p), []).append(e)
    if any(f < 0 for f in twin):
        return None
    return tuple(twin)


def parse_graph(text: str | bytes, allow_boundary: bool = False) -> UndirectedGraph | DirectedMultigraph:
    """Parse the line-oriented graph format.

    Header ``undirected <n> <m>`` or ``digraph <n> <m> root=<r>`` followed by
    ``m`` lines ``e <u> <v> <p>`` (undirected) or ``a <tail> <head> <p>``.
    ``#`` starts a comment. Digraphs whose arcs pair up into anti-parallel
    twins of equal probability are returned with a twin map.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header = None
    items: list[tuple[int, int, float]] = []
    kind = n = m = root = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = line.split()
        if not tokens:
            continue
        col = lambda k: _column(line, tokens, k)  # noqa: E731
        if header is None:
            header = tokens
            kind = tokens[0]
            if kind not in ("undirected", "digraph"):
                raise GraphFormatError(f"unknown graph kind {kind!r}", lineno, col(0))
            want = 3 if kind == "undirected" else 4
            if len(tokens) != want:
                raise GraphFormatError(f"{kind} header needs {want - 1} fields", lineno, 1)
            n = _int(tokens[1], lineno, col(1))
            m = _int(tokens[2], lineno, col(2))
            if n < 1 or m < 0:
                raise GraphFormatError("header counts out of range", lineno, col(1))
            if kind == "digraph":
                if not tokens[3].startswith("root="):
                    raise GraphFormatError("digraph header needs root=<r>", lineno, col(3))
                root = _int(tokens[3][5:], lineno, col(3))
                if not 0 <= root < n:
                    raise GraphFormatError(f"root {root} is not a vertex", lineno, col(3))
            continue
        tag = "e" if kind == "undirected" else "a"
        if tokens[0] != tag:
            raise GraphFormatError(f"expected '{tag}' line, got {tokens[0]!r}", lineno, col(0))
        if len(tokens) != 4:
            raise GraphFormatError(f"'{tag}' line needs 3 fields", lineno, col(0))
        u = _int(tokens[1], lineno, col(1))
        v = _int(tokens[2], lineno, col(2))
        for k, x in ((1, u), (2, v)):
            if not 0 <= x < n:
                raise GraphFormatError(f"dangling vertex id {x}", lineno, col(k))
        if u == v:
            raise GraphFormatError("self-loop", lineno, col(1))
        try:
            p = float(tokens[3])
        except ValueError:
            raise GraphFormatError(f"bad probability {tokens[3]!r}", lineno, col(3)) from None
        if not math.isfinite(p) or not _check_prob(p, allow_boundary):
            rng = "[0,1]" if allow_boundary else "(0,1)"
            raise GraphFormatError(f"probability {tokens[3]} out of range {rng}", lineno, col(3))
        items.append((u, v, p))
    if header is None:
        raise GraphFormatError("missing header")
    if len(items) != m:
        raise GraphFormatError(f"header declares {m} lines, found {len(items)}")
    if kind == "undirected":
        return UndirectedGraph(n, tuple(Edge(*it) for it in items))
    arcs = tuple(Arc(*it) for it in items)
    return DirectedMultigraph(n, root, arcs, pair_twins(arcs))


def _int(token: str, line: int, column: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(f"expected integer, got {token!r}", line, column) from None


def _column(line: str, tokens: list[str], k: int) -> int:
    pos = 0
    for i, tok in enumerate(tokens):
        pos = line.index(tok, pos)
        if i == k:
            return pos + 1
        pos += len(tok)
    return 1


def format_graph(g: UndirectedGraph | DirectedMultigraph) -> str:
    if isinstance(g, UndirectedGraph):
        lines = [f"undirected {g.n} {g.m}"] + [f"e {u} {v} {p!r}" for u, v, p in g.edges]
    else:
        lines = [f"digraph {g.n} {g.m} root={g.root}"] + [f"a {t} {h} {p!r}" for t, h, p in g.arcs]
    return "\n".join(lines) + "\n"


def load_graph(path, allow_boundary: bool = False):
    with open(path, "rb") as fh:
        return parse_graph(fh.read(), allow_boundary=allow_boundary)


def resolve_boundary(g):
    """Drop always-failing elements (p = 1).

    Elements with p = 0 are kept; every sampler draws them present with
    probability one. Ids of the surviving elements are renumbered.
    """
    if isinstance(g, UndirectedGraph):
        return UndirectedGraph(g.n, tuple(e for e in g.edges if e.p < 1.0))
    keep = [e for e, a in enumerate(g.arcs) if a.p < 1.0]
    arcs = tuple(g.arcs[e] for e in keep)
    return DirectedMultigraph(g.n, g.root, arcs, pair_twins(arcs) if g.twin is not None else None)


# ------------------------------------------------------- transformations


def bidirect(g: UndirectedGraph, root: int = 0) -> DirectedMultigraph:
    """Replace every edge by an anti-parallel arc pair.

    Edge ``i = {u, v}`` becomes arcs ``2i = u->v`` and ``2i+1 = v->u``.
    """
    if not 0 <= root < g.n:
        raise GraphError(f"root {root} is not a vertex")
    arcs: list[Arc] = []
    twin: list[int] = []
    for i, (u, v, p) in enumerate(g.edges):
        arcs += [Arc(u, v, p), Arc(v, u, p)]
        twin += [2 * i + 1, 2 * i]
    return DirectedMultigraph(g.n, root, tuple(arcs), tuple(twin))


def contract_pair(g: DirectedMultigraph, u: int, v: int) -> tuple[DirectedMultigraph, list[int], list[int]]:
    """Delete all arcs between ``u`` and ``v`` and identify the two vertices.

    The merged vertex takes the label ``min(u, v)``; labels above
    ``max(u, v)`` shift down by one. Returns the new graph, the removed arc
    ids of ``g`` and a map from arc ids of ``g`` to arc ids of the new graph
    (-1 for removed arcs).
    """
    if u == v:
        raise GraphError("cannot contract a vertex with itself")
    for x in (u, v):
        if not 0 <= x < g.n:
            raise GraphError(f"vertex {x} out of range")
    lo, hi = min(u, v), max(u, v)
    removed = [e for e, a in enumerate(g.arcs) if {a.tail, a.head} == {lo, hi}]
    if not removed:
        raise GraphError(f"vertices {u} and {v} are not adjacent")

    def relabel(x: int) -> int:
        if x == hi:
            return lo
        return x - 1 if x > hi else x

    gone = set(removed)
    arc_map = [-1] * g.m
    arcs: list[Arc] = []
    for e, (t, h, p) in enumerate(g.arcs):
        if e in gone:
            continue
        arc_map[e] = len(arcs)
        arcs.append(Arc(relabel(t), relabel(h), p))
    twin = None
    if g.twin is not None:
        twin = [0] * len(arcs)
        for e, new in enumerate(arc_map):
            if new >= 0:
                twin[new] = arc_map[g.twin[e]]
        twin = tuple(twin)
    h = DirectedMultigraph(g.n - 1, relabel(g.root), tuple(arcs), twin)
    return h, removed, arc_map


# ---------------------------------------------------------- connectivity


def strongly_connected_components(n: int, succ: Sequence[Iterable[int]]) -> list[int]:
    """Iterative Tarjan. Component ids follow completion order, so every
    component is numbered before any component that has an arc into it."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comp = [-1] * n
    counter = 0
    ncomp = 0
    for s in range(n):
        if index[s] >= 0:
            continue
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        on_stack[s] = True
        work = [(s, iter(succ[s]))]
        while work:
            v, it = work[-1]
            for w in it:
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ[w])))
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def successors(g: DirectedMultigraph, s: ArcSubset, within: AbstractSet[int] | None = None) -> list[list[int]]:
    succ: list[list[int]] = [[] for _ in range(g.n)]
    for e in sorted(s):
        t, h, _ = g.arcs[e]
        if within is None or (t in within and h in within):
            succ[t].append(h)
    return succ


def scc_condensation(g: DirectedMultigraph, s: ArcSubset) -> tuple[list[int], list[list[int]]]:
    """SCCs of ``(V, s)`` and the deduplicated condensation adjacency.

    Component ids are in reverse topological order: every DAG arc goes from
    a higher id to a lower one.
    """
    comp = strongly_connected_components(g.n, successors(g, s))
    k = max(comp) + 1
    dag: list[set[int]] = [set() for _ in range(k)]
    for e in s:
        t, h, _ = g.arcs[e]
        if comp[t] != comp[h]:
            dag[comp[t]].add(comp[h])
    return comp, [sorted(d) for d in dag]


def reaching_root(g: DirectedMultigraph, s: ArcSubset) -> set[int]:
    """Vertices with a directed path to the root using arcs of ``s``."""
    pred: list[list[int]] = [[] for _ in range(g.n)]
    for e in s:
        t, h, _ = g.arcs[e]
        pred[h].append(t)
    seen = {g.root}
    todo = [g.root]
    while todo:
        v = todo.pop()
        for w in pred[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def is_root_connected(g: DirectedMultigraph, s: ArcSubset | None = None) -> bool:
    if s is None:
        s = range(g.m)
    return len(reaching_root(g, s)) == g.n


def is_connected(g: UndirectedGraph, s: EdgeSubset | None = None) -> bool:
    if s is None:
        s = range(g.m)
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    parts = g.n
    for i in s:
        a, b = find(g.edges[i].u), find(g.edges[i].v)
        if a != b:
            parent[a] = b
            parts -= 1
    return parts == 1


# -------------------------------------------------------------- counting


def bareiss_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def count_arborescences(g: DirectedMultigraph) -> int:
    """Number of spanning in-trees oriented toward the root.

    Directed matrix-tree theorem on the out-degree Laplacian with the root
    row and column deleted. Failure probabilities are ignored.
    """
    lap = [[0] * g.n for _ in range(g.n)]
    for t, h, _ in g.arcs:
        lap[t][t] += 1
        lap[t][h] -= 1
    keep = [v for v in range(g.n) if v != g.root]
    return bareiss_determinant([[lap[i][j] for j in keep] for i in keep])


def count_spanning_trees(g: UndirectedGraph) -> int:
    lap = [[0] * g.n for _ in range(g.n)]
    for u, v, _ in g.edges:
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    return bareiss_determinant([row[1:] for row in lap[1:]])


def bridges(g: UndirectedGraph) -> list[int]:
    """Ids of bridge edges (parallel copies are never bridges)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for i, (u, v, _) in enumerate(g.edges):
        adj[u].append((v, i))
        adj[v].append((u, i))
    disc = [-1] * g.n
    low = [0] * g.n
    out: list[int] = []
    timer = 0
    for s in range(g.n):
        if disc[s] >= 0:
            continue
        disc[s] = low[s] = timer
        timer += 1
        work = [(s, -1, iter(adj[s]))]
        while work:
            v, via, it = work[-1]
            for w, i in it:
                if i == via:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    work.append((w, i, iter(adj[w])))
                    break
                low[v] = min(low[v], disc[w])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        out.append(via)
    return sorted(out)


# --------------------------------------------------------------- weights


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def subgraph_log_weight(g: UndirectedGraph | DirectedMultigraph, s: AbstractSet[int]) -> float:
    """Natural log of prod_{e in s}(1-p_e) * prod_{e not in s} p_e."""
    total = 0.0
    for e, p in enumerate(g.fail_probs):
        total += _log(1.0 - p) if e in s else _log(p)
    return total


def logsumexp(values: Iterable[float]) -> float:
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))
