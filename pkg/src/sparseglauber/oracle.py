"""Brute-force exact computation on small instances.

Everything here enumerates configurations, so it is the ground truth the
samplers and tree recursions are tested against.  Arithmetic is exact
(Fraction) whenever the model parameter is rational and the instance has at
most EXACT_SITE_CAP free sites; otherwise double precision with a fixed
summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import (
    EmptySupportError,
    EnumerationOverflowError,
    InvalidParameterError,
)
from .graphs import Graph
from .models import Configuration, ModelSpec, Pinning, weight

FREE_SITE_CAP = 25
EXACT_SITE_CAP = 20


@dataclass(frozen=True)
class DiscreteDistribution:
    """Exact finite distribution over full-site configurations.

    ``outcomes`` are spin tuples over all sites (pinned sites included at
    their pinned value); zero-weight configurations are excluded, so every
    probability is positive and the probabilities sum to one.
    """

    sites: int
    outcomes: tuple            # tuples of 0/1, length == sites
    probabilities: tuple       # parallel, positive, sums to 1
    Z: object                  # partition function (Fraction or float)

    def prob(self, outcome) -> float:
        try:
            return self.probabilities[self.outcomes.index(tuple(outcome))]
        except ValueError:
            return 0.0

    def as_dict(self):
        return dict(zip(self.outcomes, self.probabilities))

    def min_prob(self):
        return min(self.probabilities)

    def marginal(self, site: int):
        """P(site has spin 1)."""
        return sum(p for o, p in zip(self.outcomes, self.probabilities) if o[site])

    def restrict(self, sites):
        """Marginal distribution over a subset of site coordinates."""
        sites = tuple(sites)
        acc = {}
        for o, p in zip(self.outcomes, self.probabilities):
            key = tuple(o[s] for s in sites)
            acc[key] = acc.get(key, 0) + p
        outs = tuple(sorted(acc))
        return DiscreteDistribution(
            sites=len(sites),
            outcomes=outs,
            probabilities=tuple(acc[o] for o in outs),
            Z=self.Z,
        )


def _site_count(g: Graph, m: ModelSpec) -> int:
    return g.n if m.vertex_model else len(g.edges)


def exact_distribution(g: Graph, m: ModelSpec, p: Pinning | None = None) -> DiscreteDistribution:
    """Exact conditional distribution given a pinning, by enumeration.

    Raises EnumerationOverflowError beyond FREE_SITE_CAP free sites and
    EmptySupportError when no positive-weight configuration matches the
    pinning.
    """
    nsites = _site_count(g, m)
    pins = dict(p.items()) if p is not None else {}
    for s in pins:
        if not (0 <= s < nsites):
            raise InvalidParameterError(f"pinned site {s} out of range")
    free = [s for s in range(nsites) if s not in pins]
    if len(free) > FREE_SITE_CAP:
        raise EnumerationOverflowError(
            f"{len(free)} free sites exceeds the enumeration cap {FREE_SITE_CAP}")
    exact = m.exact_param and len(free) <= EXACT_SITE_CAP
    domain = "vertex" if m.vertex_model else "edge"

    base = [0] * nsites
    for s, spin in pins.items():
        base[s] = spin
    outcomes = []
    weights = []
    for assignment in product((0, 1), repeat=len(free)):
        values = list(base)
        for s, spin in zip(free, assignment):
            values[s] = spin
        w = weight(g, m, Configuration(domain, tuple(values)))
        if not exact:
            w = float(w)
        if w > 0:
            outcomes.append(tuple(values))
            weights.append(w)
    if not outcomes:
        raise EmptySupportError("pinning admits no positive-weight configuration")
    Z = sum(weights)
    probs = tuple(w / Z for w in weights)
    return DiscreteDistribution(sites=nsites, outcomes=tuple(outcomes),
                                probabilities=probs, Z=Z)


def exact_marginal(g: Graph, m: ModelSpec, p: Pinning | None, site: int):
    """P(site = 1 | pinning), by enumeration."""
    nsites = _site_count(g, m)
    if not (0 <= site < nsites):
        raise InvalidParameterError(f"site {site} out of range")
    if p is not None and site in p.spins:
        raise InvalidParameterError(f"site {site} is pinned")
    return exact_distribution(g, m, p).marginal(site)


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance: half the L1 gap over the union of supports."""
    pd, qd = p.as_dict(), q.as_dict()
    keys = set(pd) | set(qd)
    return float(sum(abs(pd.get(k, 0) - qd.get(k, 0)) for k in sorted(keys))) / 2.0


def empirical_distribution(counts: dict) -> DiscreteDistribution:
    """Wrap outcome counts as a distribution (for TV tests against oracles)."""
    total = sum(counts.values())
    if total <= 0:
        raise InvalidParameterError("empty sample")
    outs = tuple(sorted(k for k, c in counts.items() if c > 0))
    nsites = len(outs[0]) if outs else 0
    return DiscreteDistribution(
        sites=nsites,
        outcomes=outs,
        probabilities=tuple(counts[o] / total for o in outs),
        Z=1.0,
    )


def _as_function(f, outcomes):
    if callable(f):
        return {o: f(o) for o in outcomes}
    missing = [o for o in outcomes if o not in f]
    if missing:
        raise InvalidParameterError(
            f"functional undefined on {len(missing)} support configurations")
    return {o: f[o] for o in outcomes}


def entropy(mu: DiscreteDistribution, f) -> float:
    """Ent(f) = E[f log f] - E[f] log E[f], natural log, 0 log 0 = 0.

    ``f`` is a nonnegative functional on the support: a dict keyed by
    outcome tuples or a callable.
    """
    table = _as_function(f, mu.outcomes)
    mean = 0.0
    mean_flogf = 0.0
    for o, p in zip(mu.outcomes, mu.probabilities):
        val = float(table[o])
        if val < 0:
            raise InvalidParameterError("entropy functional must be nonnegative")
        p = float(p)
        mean += p * val
        if val > 0:
            mean_flogf += p * val * math.log(val)
    if mean <= 0:
        return 0.0
    return mean_flogf - mean * math.log(mean)


def conditional_entropy(mu: DiscreteDistribution, f, S) -> float:
    """Expected conditional entropy of f on S, boundary drawn from mu.

    Groups the support by the configuration outside S, computes Ent of f
    under each conditional law, and averages with the boundary marginals.
    When S covers every site this reduces to entropy(mu, f).
    """
    S = set(S)
    outside = [s for s in range(mu.sites) if s not in S]
    if not outside:
        return entropy(mu, f)
    table = _as_function(f, mu.outcomes)
    groups = {}
    for o, p in zip(mu.outcomes, mu.probabilities):
        key = tuple(o[s] for s in outside)
        groups.setdefault(key, []).append((o, p))
    total = 0.0
    for key in sorted(groups):
        members = groups[key]
        pkey = float(sum(p for _, p in members))
        if pkey <= 0:
            continue
        sub_out = tuple(o for o, _ in members)
        sub_probs = tuple(float(p) / pkey for _, p in members)
        sub = DiscreteDistribution(sites=mu.sites, outcomes=sub_out,
                                   probabilities=sub_probs, Z=1.0)
        total += pkey * entropy(sub, {o: table[o] for o in sub_out})
    return total


def crude_factorization_bound(s: int, b: float) -> float:
    """Multiplier 2 s^2 log(1/b) / b^(2s+2) relating Ent to single-site
    conditional entropies of a b-marginally-bounded law on s sites."""
    if s < 1:
        raise InvalidParameterError("s must be >= 1")
    if not 0 < b < 1:
        raise InvalidParameterError("b must lie in (0,1)")
    return 2.0 * s * s * math.log(1.0 / b) / b ** (2 * s + 2)
