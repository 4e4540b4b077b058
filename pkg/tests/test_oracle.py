"""Enumeration oracle: distributions, marginals, TV, entropy functionals."""

import math
import random
from fractions import Fraction
from itertools import product

import pytest

from sparseglauber import (
    Configuration,
    EmptySupportError,
    EnumerationOverflowError,
    Graph,
    InvalidParameterError,
    ModelSpec,
    Pinning,
    conditional_entropy,
    crude_factorization_bound,
    empirical_distribution,
    entropy,
    exact_distribution,
    exact_marginal,
    hardcore_marginal_bound,
    tv_distance,
    weight,
)
from sparseglauber.oracle import DiscreteDistribution

from conftest import connected_graphs_upto, random_graph

TRIANGLE = Graph(3, [(0, 1), (0, 2), (1, 2)])
EDGE = Graph(2, [(0, 1)])
C4 = Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


class TestExactDistribution:
    def test_triangle_hardcore(self):
        dist = exact_distribution(TRIANGLE, ModelSpec("hardcore", 1))
        assert dist.Z == Fraction(4)
        assert set(dist.probabilities) == {Fraction(1, 4)}
        assert len(dist.outcomes) == 4

    def test_single_edge_hardcore(self):
        dist = exact_distribution(EDGE, ModelSpec("hardcore", 1))
        assert dist.Z == Fraction(3)

    def test_single_edge_matchings(self):
        dist = exact_distribution(EDGE, ModelSpec("matchings", 1))
        assert dist.Z == Fraction(2)
        assert dist.marginal(0) == Fraction(1, 2)

    def test_probabilities_sum_to_one(self, rng):
        for _ in range(20):
            g = random_graph(rng, 6, 0.4)
            for kind, p in (("hardcore", 0.8), ("ising", 0.6), ("matchings", 1.2)):
                dist = exact_distribution(g, ModelSpec(kind, p))
                assert sum(dist.probabilities) == pytest.approx(1.0, abs=1e-12)
                assert all(p > 0 for p in dist.probabilities)

    def test_partition_function_consistency(self, rng):
        # Z equals the total weight over all configurations
        graphs = list(connected_graphs_upto(5))
        graphs += [random_graph(rng, n, 0.4) for n in (6, 7, 8) for _ in range(4)]
        for g in graphs:
            for kind, p in (("hardcore", 1), ("ising", Fraction(1, 2)),
                            ("matchings", 2)):
                m = ModelSpec(kind, p)
                dist = exact_distribution(g, m)
                nsites = g.n if m.vertex_model else len(g.edges)
                dom = "vertex" if m.vertex_model else "edge"
                total = sum(weight(g, m, Configuration(dom, c))
                            for c in product((0, 1), repeat=nsites))
                assert dist.Z == total  # exact rational equality

    def test_pinning_conditional(self):
        m = ModelSpec("hardcore", 1)
        dist = exact_distribution(EDGE, m, Pinning({0: 1}))
        assert dist.Z == Fraction(1)
        assert dist.outcomes == ((1, 0),)

    def test_empty_support(self):
        m = ModelSpec("hardcore", 1)
        with pytest.raises(EmptySupportError):
            exact_distribution(EDGE, m, Pinning({0: 1, 1: 1}))

    def test_enumeration_guard(self):
        g = Graph(26, [])
        with pytest.raises(EnumerationOverflowError):
            exact_distribution(g, ModelSpec("hardcore", 1.0))


class TestExactMarginal:
    def test_isolated_vertex(self):
        g = Graph(1, [])
        lam = Fraction(3, 2)
        assert exact_marginal(g, ModelSpec("hardcore", lam), None, 0) == \
            lam / (1 + lam)

    def test_c4_marginal(self):
        assert exact_marginal(C4, ModelSpec("hardcore", 1), None, 0) == Fraction(2, 7)

    def test_ising_edge_conditional(self):
        beta = Fraction(2, 5)
        got = exact_marginal(EDGE, ModelSpec("ising", beta), Pinning({1: 1}), 0)
        assert got == beta / (1 + beta)

    def test_law_of_total_probability(self, rng):
        for _ in range(25):
            g = random_graph(rng, 6, 0.45)
            m = ModelSpec("hardcore", 0.9)
            u, v = rng.sample(range(6), 2)
            lhs = exact_marginal(g, m, None, v)
            base = exact_distribution(g, m)
            pu = base.marginal(u)
            rhs = 0.0
            for k in (0, 1):
                pk = pu if k else 1 - pu
                if pk > 0:
                    rhs += pk * exact_marginal(g, m, Pinning({u: k}), v)
            assert float(lhs) == pytest.approx(float(rhs), abs=1e-12)


class TestTvDistance:
    def test_identical(self):
        d = exact_distribution(TRIANGLE, ModelSpec("hardcore", 1))
        assert tv_distance(d, d) == 0.0

    def test_disjoint_supports(self):
        a = DiscreteDistribution(1, ((0,),), (1.0,), 1.0)
        b = DiscreteDistribution(1, ((1,),), (1.0,), 1.0)
        assert tv_distance(a, b) == 1.0

    def test_half(self):
        a = DiscreteDistribution(1, ((0,), (1,)), (0.5, 0.5), 1.0)
        b = DiscreteDistribution(1, ((0,),), (1.0,), 1.0)
        assert tv_distance(a, b) == 0.5

    def test_empirical_wrapper(self):
        emp = empirical_distribution({(0, 1): 3, (1, 0): 1})
        assert emp.prob((0, 1)) == 0.75


class TestEntropy:
    def test_constant_is_zero(self):
        d = exact_distribution(TRIANGLE, ModelSpec("hardcore", 1))
        f = {o: 2.5 for o in d.outcomes}
        assert entropy(d, f) == pytest.approx(0.0, abs=1e-14)

    def test_two_point(self):
        d = DiscreteDistribution(1, ((0,), (1,)), (0.5, 0.5), 1.0)
        assert entropy(d, {(0,): 2.0, (1,): 0.0}) == pytest.approx(math.log(2))

    def test_scaled_indicator(self):
        d = DiscreteDistribution(2, ((0, 0), (0, 1), (1, 0), (1, 1)),
                                 (0.25,) * 4, 1.0)
        f = {o: 2.0 if o[0] else 0.0 for o in d.outcomes}
        assert entropy(d, f) == pytest.approx(math.log(2))

    def test_negative_rejected(self):
        d = DiscreteDistribution(1, ((0,),), (1.0,), 1.0)
        with pytest.raises(InvalidParameterError):
            entropy(d, {(0,): -1.0})

    def test_conditional_full_set_equals_entropy(self, rng):
        g = random_graph(rng, 5, 0.5)
        d = exact_distribution(g, ModelSpec("ising", 0.6))
        f = {o: rng.random() * 2 for o in d.outcomes}
        assert conditional_entropy(d, f, range(5)) == pytest.approx(entropy(d, f))

    def test_conditional_constant_zero(self, rng):
        g = random_graph(rng, 5, 0.5)
        d = exact_distribution(g, ModelSpec("hardcore", 1.0))
        f = {o: 3.0 for o in d.outcomes}
        for S in ([0], [1, 3], [0, 2, 4]):
            assert conditional_entropy(d, f, S) == pytest.approx(0.0, abs=1e-13)

    def test_product_factorisation_inequality(self, rng):
        # product law: Ent(f) <= sum of one-block conditional entropies
        for _ in range(100):
            n1, n2 = rng.randint(1, 3), rng.randint(1, 3)
            g = Graph(n1 + n2, [])  # empty graph -> product of single sites
            m = ModelSpec("hardcore", rng.uniform(0.3, 2.0))
            d = exact_distribution(g, m)
            f = {o: rng.random() * 3 for o in d.outcomes}
            lhs = entropy(d, f)
            rhs = (conditional_entropy(d, f, range(n1)) +
                   conditional_entropy(d, f, range(n1, n1 + n2)))
            assert lhs <= rhs + 1e-10

    def test_crude_factorisation_inequality(self, rng):
        # Ent under any pinning is controlled by single-site conditional
        # entropies scaled by the crude multiplier
        checked = 0
        while checked < 100:
            g = random_graph(rng, 6, 0.4)
            m = ModelSpec("hardcore", 1.0)
            pinned = {v: rng.randint(0, 1) for v in range(6) if rng.random() < 0.3}
            free = [v for v in range(6) if v not in pinned]
            if not 1 <= len(free) <= 4:
                continue
            try:
                d = exact_distribution(g, m, Pinning(pinned))
            except EmptySupportError:
                continue
            f = {o: rng.random() * 2 + 0.01 for o in d.outcomes}
            D = max(g.degree(v) for v in range(6))
            b = hardcore_marginal_bound(1.0, D)
            mult = crude_factorization_bound(len(free), b)
            lhs = entropy(d, f)
            rhs = sum(conditional_entropy(d, f, [v]) for v in free)
            assert lhs <= mult * rhs + 1e-10
            checked += 1


class TestCrudeFactorizationBound:
    def test_values(self):
        assert crude_factorization_bound(1, 0.5) == pytest.approx(32 * math.log(2))
        assert crude_factorization_bound(2, 0.5) == pytest.approx(512 * math.log(2))

    def test_limit_b_to_one(self):
        assert crude_factorization_bound(1, 1 - 1e-12) == pytest.approx(0.0, abs=1e-9)

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            crude_factorization_bound(0, 0.5)
        with pytest.raises(InvalidParameterError):
            crude_factorization_bound(1, 1.0)
