"""Component DP vs the enumeration oracle, and exact component sampling."""

import random
from collections import Counter

import pytest

from sparseglauber import (
    ComponentTooComplexError,
    EmptySupportError,
    Graph,
    ModelSpec,
    Pinning,
    conditional_marginal_dp,
    conditional_sample_dp,
    empirical_distribution,
    exact_distribution,
    exact_marginal,
    induced_components,
    matching_marginal_dp,
    matching_sample_dp,
    subgraph_components,
    tv_distance,
)
from sparseglauber.rng import PHASE_FINAL, PhiloxStream

from conftest import random_graph

C4 = Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
C5 = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])


def whole_component(g):
    return induced_components(g, range(g.n)).components[0]


def oracle_vertex_marginal(g, comp, pins, m, target):
    """Independent check: enumerate the model restricted to the component
    with pinned outside neighbors realised as extra pinned vertices."""
    verts = sorted(set(comp.vertices) | set(pins))
    remap = {v: i for i, v in enumerate(verts)}
    edges = []
    comp_set = set(comp.vertices)
    for u, v in g.edges:
        if u in comp_set and v in comp_set:
            edges.append((remap[u], remap[v]))
        elif (u in comp_set and v in pins) or (v in comp_set and u in pins):
            edges.append(tuple(sorted((remap[u], remap[v]))))
    sub = Graph(len(verts), edges)
    sub_pins = {remap[v]: s for v, s in pins.items()}
    return float(exact_marginal(sub, m, Pinning(sub_pins), remap[target]))


class TestVertexMarginal:
    def test_single_vertex(self):
        g = Graph(1, [])
        comp = whole_component(g)
        lam = 1.8
        got = conditional_marginal_dp(g, comp, None, ModelSpec("hardcore", lam), 0)
        assert got == pytest.approx(lam / (1 + lam))

    def test_c4_hardcore(self):
        comp = whole_component(C4)
        got = conditional_marginal_dp(C4, comp, None, ModelSpec("hardcore", 1.0), 0)
        assert got == pytest.approx(2 / 7, abs=1e-14)

    def test_c5_ising(self):
        comp = whole_component(C5)
        m = ModelSpec("ising", 0.5)
        got = conditional_marginal_dp(C5, comp, None, m, 2)
        want = float(exact_marginal(C5, m, None, 2))
        assert got == pytest.approx(want, abs=1e-12)

    def test_pinned_neighbor_blocks(self):
        g = Graph(2, [(0, 1)])
        comp = whole_component(g)
        got = conditional_marginal_dp(g, comp, Pinning({1: 1}),
                                      ModelSpec("hardcore", 1.0), 0)
        assert got == 0.0

    def test_contradictory_pins(self):
        # two adjacent occupied pins inside the component: empty support
        g = Graph(3, [(0, 1), (1, 2)])
        comp = whole_component(g)
        with pytest.raises(EmptySupportError):
            conditional_marginal_dp(g, comp, Pinning({0: 1, 1: 1}),
                                    ModelSpec("hardcore", 1.0), 2)

    def test_excess_cap(self):
        k5 = Graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
        comp = whole_component(k5)
        with pytest.raises(ComponentTooComplexError):
            conditional_marginal_dp(k5, comp, None, ModelSpec("hardcore", 1.0),
                                    0, k_max=2)

    def test_random_equivalence_all_models(self, rng):
        # random graphs, random component, random boundary pins
        for trial in range(200):
            g = random_graph(rng, rng.randint(3, 10), 0.35)
            region = {v for v in range(g.n) if rng.random() < 0.75}
            if not region:
                continue
            decomp = induced_components(g, region)
            comp = decomp.components[rng.randrange(len(decomp.components))]
            in_comp = set(comp.vertices)
            boundary = {y for x in in_comp for y in g.adj[x]} - in_comp
            pins = {b: rng.randint(0, 1) for b in boundary}
            target = comp.vertices[rng.randrange(len(comp.vertices))]
            kind, param = rng.choice([("hardcore", 0.8), ("hardcore", 1.5),
                                      ("ising", 0.55), ("ising", 0.75)])
            m = ModelSpec(kind, param)
            try:
                want = oracle_vertex_marginal(g, comp, pins, m, target)
            except EmptySupportError:
                with pytest.raises(EmptySupportError):
                    conditional_marginal_dp(g, comp, Pinning(pins), m, target)
                continue
            got = conditional_marginal_dp(g, comp, Pinning(pins), m, target)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestMatchingMarginal:
    def oracle_blocked(self, g, comp, blocked_pins, gamma, target):
        """Independent check via pendant edges pinned matched."""
        comp_edges = sorted(set(comp.tree_edges) | set(comp.excess_edges))
        comp_edges = [(min(a, b), max(a, b)) for a, b in comp_edges]
        verts = sorted({x for e in comp_edges for x in e})
        remap = {v: i for i, v in enumerate(verts)}
        blocked = sorted({x for eidx, s in blocked_pins.items() if s
                          for x in g.edges[eidx] if x in remap})
        n_sub = len(verts) + len(blocked)
        edges = [(remap[a], remap[b]) for a, b in comp_edges]
        pin_map = {}
        for k, x in enumerate(blocked):
            aux = len(verts) + k
            edges.append((remap[x], aux))
            pin_map[len(edges) - 1] = 1  # will reindex below
        sub = Graph(n_sub, edges)
        # recover indices after canonical sorting
        pins = {}
        for k, x in enumerate(blocked):
            aux = len(verts) + k
            pins[sub.edge_index(remap[x], aux)] = 1
        tgt = sub.edge_index(remap[g.edges[target][0]], remap[g.edges[target][1]])
        return float(exact_marginal(sub, ModelSpec("matchings", gamma),
                                    Pinning(pins), tgt))

    def test_random_equivalence(self, rng):
        for trial in range(150):
            g = random_graph(rng, rng.randint(3, 9), 0.4)
            if not g.edges:
                continue
            sub_edges = [e for e in g.edges if rng.random() < 0.8]
            if not sub_edges:
                continue
            decomp = subgraph_components(g.n, sub_edges)
            comp = decomp.components[rng.randrange(len(decomp.components))]
            if comp.tree_excess > 6:
                continue
            comp_edge_idx = {g.edge_index(*e)
                             for e in list(comp.tree_edges) + list(comp.excess_edges)}
            in_comp = set(comp.vertices)
            # boundary: other edges touching the component, pinned randomly
            # (at most one matched edge per vertex)
            used = set()
            pins = {}
            for i, (a, b) in enumerate(g.edges):
                if i in comp_edge_idx:
                    continue
                if a in in_comp or b in in_comp:
                    if rng.random() < 0.5 and a not in used and b not in used:
                        pins[i] = 1
                        used.update((a, b))
                    else:
                        pins[i] = 0
            gamma = rng.choice([0.5, 1.0, 2.0])
            target = rng.choice(sorted(comp_edge_idx))
            m = ModelSpec("matchings", gamma)
            got = matching_marginal_dp(g, comp, Pinning(pins), m, target)
            want = self.oracle_blocked(g, comp, pins, gamma, target)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestConditionalSampling:
    def test_deterministic(self):
        comp = whole_component(C4)
        m = ModelSpec("hardcore", 1.0)
        a = conditional_sample_dp(C4, comp, None, m, seed=9)
        b = conditional_sample_dp(C4, comp, None, m, seed=9)
        assert a == b

    def test_c4_empirical_tv(self):
        comp = whole_component(C4)
        m = ModelSpec("hardcore", 1.0)
        runs = 100_000
        counts = Counter()
        for s in range(runs):
            vals = conditional_sample_dp(C4, comp, None, m, seed=s)
            counts[tuple(vals[v] for v in range(4))] += 1
        emp = empirical_distribution(counts)
        orc = exact_distribution(C4, m)
        assert tv_distance(emp, orc) <= 0.01

    def test_vertex_sampler_respects_pins(self, rng):
        g = Graph(3, [(0, 1), (1, 2)])
        comp = induced_components(g, [1]).components[0]
        m = ModelSpec("hardcore", 5.0)
        vals = conditional_sample_dp(g, comp, Pinning({0: 1, 2: 0}), m, seed=1)
        assert vals[1] == 0  # blocked by the occupied neighbor

    def test_matching_sampler_empirical(self):
        # star K_{1,3}: matchings are {} and each single edge
        g = Graph(4, [(0, 1), (0, 2), (0, 3)])
        comp = subgraph_components(4, g.edges).components[0]
        m = ModelSpec("matchings", 1.0)
        runs = 40_000
        counts = Counter()
        for s in range(runs):
            stream = PhiloxStream(s)
            vals = matching_sample_dp(g, comp, None, m,
                                      lambda j: stream.uniform(0, j, PHASE_FINAL))
            counts[tuple(vals[i] for i in range(3))] += 1
        emp = empirical_distribution(counts)
        orc = exact_distribution(g, m)
        assert tv_distance(emp, orc) <= 0.015

    def test_matching_sampler_with_excess_empirical(self):
        m = ModelSpec("matchings", 1.5)
        comp = subgraph_components(4, C4.edges).components[0]
        assert comp.tree_excess == 1
        runs = 60_000
        counts = Counter()
        for s in range(runs):
            stream = PhiloxStream(s)
            vals = matching_sample_dp(C4, comp, None, m,
                                      lambda j: stream.uniform(0, j, PHASE_FINAL))
            counts[tuple(vals[i] for i in range(4))] += 1
        emp = empirical_distribution(counts)
        orc = exact_distribution(C4, m)
        assert tv_distance(emp, orc) <= 0.015

    def test_vertex_sampler_with_excess_empirical(self):
        m = ModelSpec("ising", 0.6)
        comp = whole_component(C4)
        runs = 60_000
        counts = Counter()
        for s in range(runs):
            vals = conditional_sample_dp(C4, comp, None, m, seed=s)
            counts[tuple(vals[v] for v in range(4))] += 1
        emp = empirical_distribution(counts)
        orc = exact_distribution(C4, m)
        assert tv_distance(emp, orc) <= 0.015
