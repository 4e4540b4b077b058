"""Immutable simple graphs: generation, partitioning, decomposition.

Vertices are 0-indexed integers; edges are stored with the smaller endpoint
first and the edge list sorted, so every derived object (spanning trees,
excess edges, enumerations) is reproducible.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EnumerationOverflowError, InvalidParameterError
from .rng import PHASE_GEN, batch_words, uniform_from_word


class Graph:
    """Simple undirected graph with adjacency and degree access.

    Immutable after construction; no self-loops or duplicate edges.
    """

    __slots__ = ("n", "edges", "adj", "_edge_index")

    def __init__(self, n: int, edges):
        if n < 0:
            raise InvalidParameterError("vertex count must be nonnegative")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidParameterError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidParameterError(f"edge ({u},{v}) out of range for n={n}")
            if u > v:
                u, v = v, u
            if (u, v) in canon:
                raise InvalidParameterError(f"duplicate edge ({u},{v})")
            canon.add((u, v))
        self.n = n
        self.edges = tuple(sorted(canon))
        adj = [[] for _ in range(n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self.adj = tuple(tuple(sorted(a)) for a in adj)
        self._edge_index = {e: i for i, e in enumerate(self.edges)}

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def mean_degree(self) -> float:
        return 2.0 * len(self.edges) / self.n if self.n else 0.0

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_index

    def edge_index(self, u: int, v: int) -> int:
        return self._edge_index[(min(u, v), max(u, v))]

    def __repr__(self):
        return f"Graph(n={self.n}, m={len(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def content_hash(self) -> str:
        """SHA-256 of the canonical edge-list text (used in run manifests)."""
        return hashlib.sha256(to_edge_list_text(self).encode("ascii")).hexdigest()


@dataclass(frozen=True)
class VertexPartition:
    """Split of V into low-degree (<= D) and high-degree (> D) vertices."""

    threshold: float
    low: frozenset
    high: frozenset


@dataclass(frozen=True)
class Component:
    """A connected piece with a canonical spanning tree and its excess edges.

    The spanning tree is the BFS tree from the smallest vertex; excess edges
    are the remaining induced edges in lexicographic order, so tree_excess
    equals |edges| - |vertices| + 1.
    """

    vertices: tuple          # sorted
    tree_edges: tuple        # (parent, child) in BFS discovery order
    excess_edges: tuple      # sorted (u, v) with u < v

    @property
    def tree_excess(self) -> int:
        return len(self.excess_edges)


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple = field(default_factory=tuple)

    @property
    def total_tree_excess(self) -> int:
        return sum(c.tree_excess for c in self.components)


def generate_gnp(n: int, d: float, seed: int) -> Graph:
    """Sparse Erdos-Renyi graph G(n, p) with p = min(d/n, 1).

    Each unordered pair is included independently; generation walks the
    C(n,2) pair sequence with geometric skips so the cost is O(|E|) expected.
    Deterministic given (n, d, seed): equal inputs give identical edge lists.
    """
    if n < 0:
        raise InvalidParameterError("n must be nonnegative")
    if d <= 0:
        raise InvalidParameterError("d must be positive")
    if n <= 1:
        return Graph(n, [])
    p = min(d / n, 1.0)
    total = n * (n - 1) // 2
    if p >= 1.0:
        idx = np.arange(total, dtype=np.int64)
        return Graph(n, _pairs_from_linear(idx, n))
    log1mp = math.log1p(-p)
    picked = []
    pos = -1.0  # last picked linear index; skips are >= 1
    block = 0
    batch = 1 << 14
    while True:
        words = batch_words(np.uint64(seed), np.arange(block, block + batch, dtype=np.uint64),
                            np.uint64(0), PHASE_GEN)
        u = uniform_from_word(np.concatenate(words))
        # geometric skip: smallest k >= 1 with U > (1-p)^k
        skips = np.floor(np.log1p(-u) / log1mp).astype(np.float64) + 1.0
        cum = pos + np.cumsum(skips)
        if cum[-1] >= total:
            picked.append(cum[cum < total])
            break
        picked.append(cum)
        pos = cum[-1]
        block += batch
    idx = np.concatenate(picked).astype(np.int64) if picked else np.zeros(0, dtype=np.int64)
    return Graph(n, _pairs_from_linear(idx, n))


def _pairs_from_linear(idx, n):
    """Map linear indices over the row-major (i<j) pair sequence to pairs."""
    if len(idx) == 0:
        return []
    idx = idx.astype(np.float64)
    # row i starts at offset i*n - i*(i+1)/2; invert by the quadratic formula
    b = 2.0 * n - 1.0
    i = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2.0).astype(np.int64)
    start = i * n - i * (i + 1) // 2
    # float rounding can land one row off; fix up both directions
    too_big = start > idx
    while too_big.any():
        i[too_big] -= 1
        start = i * n - i * (i + 1) // 2
        too_big = start > idx
    nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
    too_small = idx >= nxt
    while too_small.any():
        i[too_small] += 1
        start = i * n - i * (i + 1) // 2
        nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
        too_small = idx >= nxt
    j = (idx - start).astype(np.int64) + i + 1
    return list(zip(i.tolist(), j.tolist()))


def degree_partition(g: Graph, D: float) -> VertexPartition:
    """Partition vertices into degree <= D (low) and degree > D (high)."""
    if D < 0:
        raise InvalidParameterError("degree threshold must be nonnegative")
    low = frozenset(v for v in range(g.n) if g.degree(v) <= D)
    return VertexPartition(threshold=D, low=low, high=frozenset(range(g.n)) - low)


def _bfs_component(neighbors, start, allowed):
    """Component of ``start`` inside ``allowed`` with BFS tree from its
    minimum vertex and lexicographic excess edges."""
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in neighbors(x):
            if y in allowed and y not in seen:
                seen.add(y)
                queue.append(y)
    verts = sorted(seen)
    root = verts[0]
    parent = {root: None}
    order = [root]
    queue = deque([root])
    tree_edges = []
    while queue:
        x = queue.popleft()
        for y in neighbors(x):
            if y in seen and y not in parent:
                parent[y] = x
                tree_edges.append((x, y))
                order.append(y)
                queue.append(y)
    tree_set = {(min(a, b), max(a, b)) for a, b in tree_edges}
    excess = []
    for x in verts:
        for y in neighbors(x):
            if y in seen and x < y and (x, y) not in tree_set:
                excess.append((x, y))
    return Component(tuple(verts), tuple(tree_edges), tuple(sorted(excess)))


def induced_components(g: Graph, s) -> ComponentDecomposition:
    """Connected components of the induced subgraph G[s], each decomposed
    into a canonical spanning tree plus excess edges."""
    s = set(s)
    for v in s:
        if not (0 <= v < g.n):
            raise InvalidParameterError(f"vertex {v} outside graph")
    comps = []
    remaining = set(s)
    for v in sorted(s):
        if v not in remaining:
            continue
        comp = _bfs_component(lambda x: g.adj[x], v, s)
        comps.append(comp)
        remaining -= set(comp.vertices)
    return ComponentDecomposition(tuple(comps))


def subgraph_components(n: int, edges) -> ComponentDecomposition:
    """Components of an explicit edge subset (isolated vertices excluded).

    Same canonical tree/excess choice as ``induced_components`` but over the
    given edges only, not all induced edges.
    """
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for v in adj:
        adj[v].sort()
    comps = []
    remaining = set(adj)
    allowed = set(adj)
    for v in sorted(adj):
        if v not in remaining:
            continue
        comp = _bfs_component(lambda x: adj[x], v, allowed)
        comps.append(comp)
        remaining -= set(comp.vertices)
    return ComponentDecomposition(tuple(comps))


def component_of_low_vertex(g: Graph, p: VertexPartition, u: int):
    """Component of ``u`` in the subgraph induced on high vertices plus u.

    Returns (component, boundary) where boundary is the set of low-degree
    vertices other than u adjacent to the component; their spins are the
    pinned context when resampling u.
    """
    if u not in p.low:
        raise InvalidParameterError(f"vertex {u} is not low-degree")
    allowed = set(p.high)
    allowed.add(u)
    comp = _bfs_component(lambda x: g.adj[x], u, allowed)
    in_comp = set(comp.vertices)
    boundary = set()
    for x in comp.vertices:
        for y in g.adj[x]:
            if y not in in_comp and y in p.low:
                boundary.add(y)
    boundary.discard(u)
    return comp, frozenset(boundary)


def ball(g: Graph, v: int, R: int):
    """All vertices at graph distance <= R from v (BFS)."""
    if R < 0:
        raise InvalidParameterError("radius must be nonnegative")
    seen = {v}
    frontier = [v]
    for _ in range(R):
        nxt = []
        for x in frontier:
            for y in g.adj[x]:
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return frozenset(seen)


def bfs_levels(g: Graph, v: int, R: int):
    """Level sizes [|dist=0|, ..., |dist=R|] of the BFS from v."""
    seen = {v}
    frontier = [v]
    levels = [1]
    for _ in range(R):
        nxt = []
        for x in frontier:
            for y in g.adj[x]:
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        levels.append(len(nxt))
        if not nxt:
            break
        frontier = nxt
    while len(levels) < R + 1:
        levels.append(0)
    return levels


def connected_sets_from(g: Graph, v: int, k: int, cap: int, min_vertex: int | None = None):
    """All connected vertex sets of size k containing v, without duplicates.

    DFS over the canonical include/exclude enumeration of connected
    supersets; aborts with EnumerationOverflowError once more than ``cap``
    sets are found.  ``min_vertex`` restricts the search to vertices >= that
    index (used to enumerate each set exactly once from its minimum vertex).
    """
    if k < 1 or cap < 1:
        raise InvalidParameterError("k and cap must be >= 1")
    lo = -1 if min_vertex is None else min_vertex
    if v < lo:
        return []
    out = []

    def extend(current, frontier, excluded):
        if len(current) == k:
            out.append(frozenset(current))
            if len(out) > cap:
                raise EnumerationOverflowError(
                    f"more than {cap} connected sets of size {k} at vertex {v}")
            return
        local_excluded = set()
        for i, w in enumerate(frontier):
            new_frontier = frontier[i + 1:]
            seenset = current | excluded | local_excluded | set(frontier)
            extra = [y for y in g.adj[w] if y >= lo and y not in seenset]
            current.add(w)
            extend(current, new_frontier + extra, excluded | local_excluded)
            current.remove(w)
            local_excluded.add(w)

    start_frontier = [y for y in g.adj[v] if y >= lo]
    extend({v}, start_frontier, set())
    return out


def to_edge_list_text(g: Graph) -> str:
    """Canonical edge-list text: "n m" header then one "u v" line per edge."""
    lines = [f"{g.n} {len(g.edges)}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def from_edge_list_text(text: str) -> Graph:
    """Parse the edge-list format; rejects self-loops, duplicates, bad ranges."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidParameterError("empty edge-list input")
    head = lines[0].split()
    if len(head) != 2:
        raise InvalidParameterError("header must be 'n m'")
    n, m = int(head[0]), int(head[1])
    if len(lines) - 1 != m:
        raise InvalidParameterError(f"expected {m} edge lines, got {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise InvalidParameterError(f"bad edge line: {ln!r}")
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < v < n):
            raise InvalidParameterError(f"edge line {ln!r} violates 0 <= u < v < n")
        edges.append((u, v))
    return Graph(n, edges)


def write_edge_list(g: Graph, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_edge_list_text(g))


def read_edge_list(path) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        return from_edge_list_text(fh.read())
