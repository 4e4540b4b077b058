"""Shared test helpers: canonical graph enumeration and random instances."""

from __future__ import annotations

import random
from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest

from sparseglauber import Graph


@lru_cache(maxsize=None)
def connected_graphs_upto(max_n: int):
    """One representative per isomorphism class of connected graphs with
    2..max_n vertices, by canonical (minimum) edge-bitmask over all vertex
    permutations."""
    from itertools import permutations

    reps = []
    for n in range(2, max_n + 1):
        pairs = list(combinations(range(n), 2))
        pos = {p: i for i, p in enumerate(pairs)}
        perms = list(permutations(range(n)))
        # bit-permutation table: applying perm sigma moves bit i to table[s][i]
        tables = []
        for s in perms:
            tables.append([pos[tuple(sorted((s[a], s[b])))] for a, b in pairs])
        seen = set()
        for mask in range(1 << len(pairs)):
            if mask in seen:
                continue
            edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            g = Graph(n, edges)
            if not _connected(g):
                continue
            orbit = set()
            for tab in tables:
                pm = 0
                for i in range(len(pairs)):
                    if mask >> i & 1:
                        pm |= 1 << tab[i]
                orbit.add(pm)
            if mask == min(orbit):
                reps.append(g)
            seen.update(o for o in orbit if o > mask)
        del seen
    return tuple(reps)


def _connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in g.adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == g.n


def random_tree(rng: random.Random, n: int) -> Graph:
    """Uniform-ish random tree: each vertex attaches to a random earlier one."""
    edges = [(rng.randrange(i), i) for i in range(1, n)]
    return Graph(n, edges)


def random_graph(rng: random.Random, n: int, p: float) -> Graph:
    edges = [(u, v) for u, v in combinations(range(n), 2) if rng.random() < p]
    return Graph(n, edges)


def random_connected_graph(rng: random.Random, n: int, extra: float = 0.25) -> Graph:
    """Random tree plus a few extra edges."""
    tree = random_tree(rng, n)
    edges = set(tree.edges)
    for u, v in combinations(range(n), 2):
        if (u, v) not in edges and rng.random() < extra / n:
            edges.add((u, v))
    return Graph(n, sorted(edges))


@pytest.fixture
def rng():
    return random.Random(20240817)
