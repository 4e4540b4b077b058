"""Model parameterisation, configuration weights and threshold formulas.

Three two-spin models are supported: hard-core (weighted independent sets,
parameter lambda), antiferromagnetic Ising (parameter beta in (0,1)), and
monomer-dimer (weighted matchings, parameter gamma).  Hard-core and Ising
configurations assign {0,1} spins to vertices; monomer-dimer assigns {0,1}
to edges, indexed by position in ``Graph.edges``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .errors import InvalidParameterError
from .graphs import Graph

HARDCORE = "hardcore"
ISING = "ising"
MATCHINGS = "matchings"

KINDS = (HARDCORE, ISING, MATCHINGS)

# Above this many sites, exact powers of a float parameter can overflow a
# double; weight() switches to exp(log-space) there.
_LOGSPACE_SITES = 64


@dataclass(frozen=True)
class ModelSpec:
    """A model kind plus its positive real parameter.

    Passing the parameter as ``int`` or ``Fraction`` enables exact rational
    arithmetic in the enumeration oracle.
    """

    kind: str
    param: object  # positive int, Fraction or float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown model kind {self.kind!r}")
        if not self.param > 0:
            raise InvalidParameterError("model parameter must be positive")

    @property
    def vertex_model(self) -> bool:
        return self.kind in (HARDCORE, ISING)

    @property
    def antiferromagnetic(self) -> bool:
        """Regime flag for the Ising model (beta < 1)."""
        return self.kind == ISING and self.param < 1

    @property
    def exact_param(self) -> bool:
        return isinstance(self.param, Rational)


@dataclass(frozen=True)
class Configuration:
    """Spin assignment over all sites of a graph (vertices or edges)."""

    domain: str            # "vertex" or "edge"
    values: tuple          # 0/1 per site, in index order

    def __post_init__(self):
        if self.domain not in ("vertex", "edge"):
            raise InvalidParameterError(f"bad configuration domain {self.domain!r}")
        if any(s not in (0, 1) for s in self.values):
            raise InvalidParameterError("spins must be 0 or 1")


@dataclass(frozen=True)
class Pinning:
    """Fixed spins on a subset of sites: mapping site index -> 0/1."""

    spins: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(s not in (0, 1) for s in self.spins.values()):
            raise InvalidParameterError("pinned spins must be 0 or 1")

    def __len__(self):
        return len(self.spins)

    def items(self):
        return self.spins.items()


def lambda_c(d: float) -> float:
    """Hard-core uniqueness threshold: d^d/(d-1)^(d+1) for d>1, else +inf.

    d=1 maps to +inf, matching the d -> 1 limit from above.  Infinity is the
    IEEE value, directly testable via math.isinf.
    """
    if d <= 0:
        raise InvalidParameterError("d must be positive")
    if d <= 1:
        return math.inf
    return math.exp(d * math.log(d) - (d + 1) * math.log(d - 1))


def beta_c(d: float) -> float:
    """Ising antiferromagnetic threshold: (d-1)/(d+1) for d>=1, else 0."""
    if d <= 0:
        raise InvalidParameterError("d must be positive")
    if d < 1:
        return 0.0
    return (d - 1) / (d + 1)


def _site_count(g: Graph, m: ModelSpec) -> int:
    return g.n if m.vertex_model else len(g.edges)


def violation_free(g: Graph, m: ModelSpec, values) -> bool:
    """True when the hard constraint of the model holds (support membership)."""
    if m.kind == HARDCORE:
        return all(not (values[u] and values[v]) for u, v in g.edges)
    if m.kind == MATCHINGS:
        cover = [0] * g.n
        for i, (u, v) in enumerate(g.edges):
            if values[i]:
                cover[u] += 1
                cover[v] += 1
                if cover[u] > 1 or cover[v] > 1:
                    return False
        return True
    return True  # Ising has soft constraints only


def _exponent(g: Graph, m: ModelSpec, values) -> int:
    """The integer e with weight = param**e (on the support)."""
    if m.kind == HARDCORE:
        return sum(values)
    if m.kind == MATCHINGS:
        return sum(values)
    # Ising: number of monochromatic edges
    return sum(1 for u, v in g.edges if values[u] == values[v])


def weight(g: Graph, m: ModelSpec, c: Configuration):
    """Unnormalised weight of a configuration.

    hard-core: lambda^|I| (0 unless I is independent); Ising:
    beta^{#monochromatic edges}; monomer-dimer: gamma^|M| (0 unless M is a
    matching).  Exact when the parameter is rational; for float parameters
    on instances with many sites the power is taken in log-space.
    """
    expected = "vertex" if m.vertex_model else "edge"
    if c.domain != expected:
        raise InvalidParameterError(
            f"{m.kind} expects a {expected} configuration, got {c.domain}")
    if len(c.values) != _site_count(g, m):
        raise InvalidParameterError("configuration length does not match site count")
    if not violation_free(g, m, c.values):
        return Fraction(0) if m.exact_param else 0.0
    e = _exponent(g, m, c.values)
    if m.exact_param:
        return Fraction(m.param) ** e
    if len(c.values) > _LOGSPACE_SITES:
        return math.exp(e * math.log(m.param))
    return float(m.param) ** e


def log_weight(g: Graph, m: ModelSpec, c: Configuration) -> float:
    """Natural log of weight(); -inf outside the support."""
    w_dom = "vertex" if m.vertex_model else "edge"
    if c.domain != w_dom:
        raise InvalidParameterError("configuration domain mismatch")
    if not violation_free(g, m, c.values):
        return -math.inf
    return _exponent(g, m, c.values) * math.log(m.param)


def hardcore_marginal_bound(lam: float, D: float) -> float:
    """Lower bound lambda/(lambda+(1+lambda)^D) on feasible conditional
    occupation marginals of degree-<=D vertices."""
    if lam <= 0 or D < 0:
        raise InvalidParameterError("need lambda > 0 and D >= 0")
    return lam / (lam + (1.0 + lam) ** D)


def ising_marginal_bound(beta: float, D: float) -> float:
    """Lower bound beta^D/(1+beta^D) for degree-<=D vertices, beta in (0,1)."""
    if not 0 < beta < 1:
        raise InvalidParameterError("beta must lie in (0,1)")
    if D < 0:
        raise InvalidParameterError("D must be nonnegative")
    bd = beta ** D
    return bd / (1.0 + bd)
