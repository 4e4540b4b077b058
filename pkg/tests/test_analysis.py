"""Influence matrices, eigenvalues, contraction sweeps, graph verification."""

import itertools
import math

import numpy as np
import pytest

from sparseglauber import (
    EnumerationOverflowError,
    Graph,
    InvalidParameterError,
    ModelSpec,
    Pinning,
    UndefinedInfluenceError,
    generate_gnp,
    lambda_c,
)
from sparseglauber.analysis import (
    InfluenceMatrix,
    VerifyConfig,
    contraction_check,
    contraction_context,
    influence_matrix,
    lambda1,
    pairwise_influence,
    spectral_independence_scan,
    verify_graph,
)
from sparseglauber.trees import tree_from_graph, tree_influence

from conftest import random_tree

EDGE = Graph(2, [(0, 1)])
PATH3 = Graph(3, [(0, 1), (1, 2)])


class TestPairwiseInfluence:
    def test_hardcore_edge(self):
        got = pairwise_influence(EDGE, ModelSpec("hardcore", 1.0), None, 0, 1)
        assert got == pytest.approx(-0.5)

    def test_disconnected_zero(self):
        g = Graph(3, [(0, 1)])
        assert pairwise_influence(g, ModelSpec("hardcore", 1.0), None, 0, 2) == \
            pytest.approx(0.0, abs=1e-15)

    def test_matchings_path(self):
        got = pairwise_influence(PATH3, ModelSpec("matchings", 1.0), None, 0, 1)
        assert got == pytest.approx(-0.5)

    def test_degenerate_marginal(self):
        # pin the only neighbor of u occupied: u is deterministically 0
        g = PATH3
        with pytest.raises(UndefinedInfluenceError):
            pairwise_influence(g, ModelSpec("hardcore", 1.0), Pinning({1: 1}),
                               0, 2)


class TestInfluenceMatrix:
    def test_empty_graph_zero_matrix(self):
        g = Graph(3, [])
        im = influence_matrix(g, ModelSpec("hardcore", 1.0))
        assert np.allclose(im.entries, 0.0)

    def test_single_edge_entry(self):
        im = influence_matrix(EDGE, ModelSpec("hardcore", 1.0))
        a = im.index.index((0, 0))
        b = im.index.index((1, 1))
        assert im.entries[a, b] == pytest.approx(1 / 2 - 1 / 3)

    def test_rows_sum_zero_over_target_spins(self):
        im = influence_matrix(PATH3, ModelSpec("ising", 0.6))
        for a in range(im.dim):
            for w in range(3):
                cols = [b for b, (site, k) in enumerate(im.index) if site == w]
                assert sum(im.entries[a, b] for b in cols) == \
                    pytest.approx(0.0, abs=1e-12)

    def test_site_cap(self):
        g = Graph(15, [])
        with pytest.raises(EnumerationOverflowError):
            influence_matrix(g, ModelSpec("hardcore", 1.0))


class TestLambda1:
    def test_zero_matrix(self):
        im = influence_matrix(Graph(3, []), ModelSpec("hardcore", 1.0))
        assert lambda1(im) == pytest.approx(0.0, abs=1e-12)

    def test_row_sum_bound(self, rng):
        from conftest import random_graph

        for _ in range(25):
            g = random_graph(rng, 5, 0.5)
            kind, p = rng.choice([("hardcore", 1.0), ("ising", 0.6)])
            im = influence_matrix(g, ModelSpec(kind, p))
            assert lambda1(im) <= im.max_abs_row_sum() + 1e-10

    def test_cross_check_sympy_4x4(self):
        sympy = pytest.importorskip("sympy")
        im = influence_matrix(EDGE, ModelSpec("hardcore", 1.0))
        assert im.dim == 4
        M = sympy.Matrix(im.entries.tolist())
        roots = [complex(v) for v in M.eigenvals()]
        want = max(r.real for r in roots)
        assert lambda1(im) == pytest.approx(want, abs=1e-9)

    def test_power_iteration_path(self):
        # force the iterative branch with a large diagonal-free matrix
        rng = np.random.default_rng(3)
        A = rng.normal(size=(80, 80))
        A = (A + A.T) / 2  # symmetric: real spectrum
        np.fill_diagonal(A, 0.0)
        im = InfluenceMatrix(index=tuple((i, 0) for i in range(80)),
                             entries=A, pinning=())
        want = float(np.max(np.linalg.eigvalsh(A)))
        assert lambda1(im) == pytest.approx(want, abs=1e-6)

    def test_relabel_invariance(self, rng):
        from conftest import random_graph

        for _ in range(10):
            g = random_graph(rng, 5, 0.5)
            perm = list(range(5))
            rng.shuffle(perm)
            g2 = Graph(5, [tuple(sorted((perm[u], perm[v]))) for u, v in g.edges])
            m = ModelSpec("hardcore", 1.2)
            assert lambda1(influence_matrix(g, m)) == pytest.approx(
                lambda1(influence_matrix(g2, m)), abs=1e-10)


class TestSpectralScan:
    def test_independent_sites(self):
        g = Graph(3, [])
        eta, worst, count = spectral_independence_scan(g, ModelSpec("hardcore", 1.0))
        assert eta == pytest.approx(0.0, abs=1e-12)

    def test_single_edge_no_pinning_dominates(self):
        m = ModelSpec("hardcore", 1.0)
        eta, worst, _ = spectral_independence_scan(EDGE, m)
        assert eta == pytest.approx(lambda1(influence_matrix(EDGE, m)), abs=1e-12)

    def test_bounded_by_row_sums(self, rng):
        from conftest import random_graph
        from itertools import product

        for _ in range(5):
            g = random_graph(rng, 4, 0.6)
            m = ModelSpec("hardcore", 1.0)
            eta, worst, _ = spectral_independence_scan(g, m)
            # max over the same conditionings of the row-sum bound
            top = 0.0
            from sparseglauber.oracle import exact_distribution
            from sparseglauber.analysis import influence_matrix_from_dist
            for choice in product((None, 0, 1), repeat=4):
                pins = {i: c for i, c in enumerate(choice) if c is not None}
                if len(pins) >= 4:
                    continue
                try:
                    dist = exact_distribution(g, m, Pinning(pins))
                except Exception:
                    continue
                if len(dist.outcomes) < 2:
                    continue
                im = influence_matrix_from_dist(dist, Pinning(pins))
                top = max(top, im.max_abs_row_sum())
            assert eta <= top + 1e-10

    def test_sampled_mode(self):
        g = Graph(6, [(i, i + 1) for i in range(5)])
        m = ModelSpec("hardcore", 1.0)
        eta, worst, count = spectral_independence_scan(g, m, pinning_budget=200,
                                                       seed=1)
        assert count <= 200
        assert eta >= 0.0


class TestContraction:
    def test_chi_value_hardcore_d2(self):
        ctx = contraction_context("hardcore", 2.0, 3.5)
        assert ctx.chi == pytest.approx(1.53039, abs=1e-4)
        assert 1 / ctx.chi + 1 / ctx.a == pytest.approx(1.0)

    def test_chi_value_matchings(self):
        ctx = contraction_context("matchings", 2.0, 1.0)
        assert ctx.chi == pytest.approx(8 / 7)

    def test_pass_inside_regime(self):
        ctx = contraction_context("hardcore", 2.0, 3.5)
        top, ok = contraction_check(ctx, 10_000, 10, seed=1)
        assert ok and top < 1.0

    def test_pass_just_inside(self):
        lam = 0.99 * lambda_c(2.0)
        ctx = contraction_context("hardcore", 2.0, lam)
        _, ok = contraction_check(ctx, 10_000, 10, seed=2)
        assert ok

    def test_fails_outside_regime(self):
        ctx = contraction_context("hardcore", 2.0, 1.5 * lambda_c(2.0))
        assert not ctx.in_regime
        top, ok = contraction_check(ctx, 10_000, 10, seed=3)
        assert not ok and top >= 1.0

    def test_matchings_pass(self):
        ctx = contraction_context("matchings", 2.0, 1.0)
        top, ok = contraction_check(ctx, 10_000, 10, seed=4)
        assert ok

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            contraction_context("hardcore", 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            contraction_context("matchings", 2.0, 0.05)  # 4*gamma*d < 1
        with pytest.raises(InvalidParameterError):
            contraction_context("ising", 2.0, 0.5)


class TestVerifyGraph:
    def test_empty_graph_passes(self):
        g = Graph(100, [])
        rep = verify_graph(g, 1.5)
        assert rep.passed and not rep.inconclusive

    def test_typical_random_graph_passes(self):
        g = generate_gnp(3000, 1.5, seed=5)
        rep = verify_graph(g, 1.5, VerifyConfig(d=1.5, D=30.0))
        assert rep.passed

    def test_clique_fails_with_witness(self):
        base = generate_gnp(3000, 1.5, seed=6)
        edges = set(base.edges)
        for u, v in itertools.combinations(range(40), 2):
            edges.add((u, v))
        g = Graph(3000, sorted(edges))
        rep = verify_graph(g, 1.5, VerifyConfig(d=1.5, D=30.0))
        assert not rep.passed
        comp_check = rep.check("high-components")
        assert not comp_check.passed
        assert comp_check.witness is not None

    def test_deterministic(self):
        g = generate_gnp(1000, 1.5, seed=9)
        r1 = verify_graph(g, 1.5)
        r2 = verify_graph(g, 1.5)
        assert r1 == r2

    def test_inconclusive_on_cap(self):
        g = generate_gnp(3000, 1.5, seed=7)
        cfg = VerifyConfig(d=1.5, D=30.0, enumeration_cap=10)
        rep = verify_graph(g, 1.5, cfg)
        assert rep.check("connected-degree-sum").inconclusive
        assert rep.inconclusive


class TestTreeInfluenceAgreement:
    def test_hardcore_and_matchings_vs_oracle(self, rng):
        # 200 random trees: analysis-oracle influences equal treecalc values
        for _ in range(200):
            n = rng.randint(3, 9)
            g = random_tree(rng, n)
            t = tree_from_graph(g, 0)
            lam = rng.choice([0.6, 1.0, 1.7])
            inf = tree_influence(t, ModelSpec("hardcore", lam))
            # a random target node
            node = rng.randrange(1, t.size)
            want = pairwise_influence(g, ModelSpec("hardcore", lam), None, 0,
                                      t.labels[node])
            assert inf[node] == pytest.approx(want, abs=1e-10)
            gamma = rng.choice([0.5, 1.0])
            edges = t.edge_list()
            base = edges[rng.randrange(len(edges))]
            minf = tree_influence(t, ModelSpec("matchings", gamma), root=base)
            tgt = edges[rng.randrange(len(edges))]
            key = (min(tgt), max(tgt))
            if key == (min(base), max(base)):
                continue
            want = pairwise_influence(
                g, ModelSpec("matchings", gamma), None,
                g.edge_index(t.labels[base[0]], t.labels[base[1]]),
                g.edge_index(t.labels[tgt[0]], t.labels[tgt[1]]))
            assert minf[key] == pytest.approx(want, abs=1e-10)
