"""Spectral-independence diagnostics and random-graph property checks.

Influence matrices are built from the enumeration oracle, so everything here
is desk-scale; the graph checks scale near-linearly and are the production
gate for running the sampler on a purportedly sparse random graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .errors import (
    EnumerationOverflowError,
    InvalidParameterError,
    NumericFailureError,
    UndefinedInfluenceError,
)
from .graphs import Graph, ball, connected_sets_from, degree_partition, induced_components
from .models import HARDCORE, MATCHINGS, ModelSpec, Pinning, lambda_c
from .oracle import DiscreteDistribution, exact_distribution
from .rng import PHASE_RESAMPLE, PhiloxStream
from .trees import default_radius, epsilon_good_check

_DENSE_EIG_DIM = 64
_POWER_MAX_ITERS = 100_000
_POWER_TOL = 1e-9


# ---------------------------------------------------------------------------
# influences
# ---------------------------------------------------------------------------

def pairwise_influence(g: Graph, m: ModelSpec, tau: Pinning | None,
                       u: int, v: int) -> float:
    """Influence of site u on site v under the conditioned law.

    Vertex models: P(v=1 | u=1) - P(v=1 | u=0).  Monomer-dimer (edge sites):
    P(f=0 | e=0) - P(f=0 | e=1).  Raises UndefinedInfluenceError when u's
    conditional marginal is deterministic.
    """
    pins = dict(tau.items()) if tau is not None else {}
    if u in pins or v in pins:
        raise InvalidParameterError("u and v must be free under the pinning")
    base = exact_distribution(g, m, Pinning(pins))
    pu = base.marginal(u)
    if not 0 < float(pu) < 1:
        raise UndefinedInfluenceError(f"site {u} has a deterministic marginal")
    hi = exact_distribution(g, m, Pinning({**pins, u: 1})).marginal(v)
    lo = exact_distribution(g, m, Pinning({**pins, u: 0})).marginal(v)
    if m.kind == MATCHINGS:
        return float((1 - lo) - (1 - hi))
    return float(hi - lo)


@dataclass(frozen=True)
class InfluenceMatrix:
    """Conditioned influence matrix over (site, spin) pairs with positive
    conditional marginal; diagonal blocks (same site) are zero."""

    index: tuple          # (site, spin) pairs
    entries: np.ndarray   # dense, entries[a, b]
    pinning: tuple        # sorted (site, spin) items of the conditioning

    @property
    def dim(self) -> int:
        return len(self.index)

    def max_abs_row_sum(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.entries).sum(axis=1)))


def influence_matrix_from_dist(dist: DiscreteDistribution,
                               tau: Pinning | None = None) -> InfluenceMatrix:
    """Influence matrix of a finite distribution (already conditioned on
    ``tau``; the pinning is recorded for reporting only)."""
    sites = dist.sites
    probs = [float(p) for p in dist.probabilities]
    outs = dist.outcomes
    pinned = dict(tau.items()) if tau is not None else {}
    marg = {}
    for s in range(sites):
        if s in pinned:
            continue
        p1 = sum(p for o, p in zip(outs, probs) if o[s])
        for i in (0, 1):
            pi = p1 if i else 1.0 - p1
            if pi > 0:
                marg[(s, i)] = pi
    index = tuple(sorted(marg))
    pos = {vi: a for a, vi in enumerate(index)}
    ent = np.zeros((len(index), len(index)))
    for (v, i), a in pos.items():
        pvi = marg[(v, i)]
        cond = [0.0] * sites
        for o, p in zip(outs, probs):
            if o[v] == i:
                for w in range(sites):
                    if o[w]:
                        cond[w] += p
        cond = [c / pvi for c in cond]
        for (w, k), b in pos.items():
            if w == v:
                continue
            base = marg.get((w, 1), 0.0)
            ck = cond[w] if k else 1.0 - cond[w]
            bk = base if k else 1.0 - base
            ent[a, b] = ck - bk
    return InfluenceMatrix(index=index, entries=ent,
                           pinning=tuple(sorted(pinned.items())))


def influence_matrix(g: Graph, m: ModelSpec, tau: Pinning | None = None,
                     sites=None) -> InfluenceMatrix:
    """Influence matrix of the model conditioned on ``tau``, optionally
    restricted to the marginal law on a subset of sites (<= 14 free sites)."""
    dist = exact_distribution(g, m, tau)
    pinned = set(tau.spins) if tau is not None else set()
    if sites is not None:
        keep = [s for s in sites if s not in pinned]
        if len(keep) > 14:
            raise EnumerationOverflowError(
                f"{len(keep)} free sites exceeds the dense influence-matrix cap 14")
        im = influence_matrix_from_dist(dist.restrict(keep))
        index = tuple((keep[s], i) for s, i in im.index)
        return InfluenceMatrix(index=index, entries=im.entries,
                               pinning=tuple(sorted(tau.items())) if tau else ())
    free = dist.sites - len(pinned)
    if free > 14:
        raise EnumerationOverflowError(
            f"{free} free sites exceeds the dense influence-matrix cap 14")
    return influence_matrix_from_dist(dist, tau)


def lambda1(M: InfluenceMatrix) -> float:
    """Largest eigenvalue of the influence matrix (its spectrum is real).

    Dense solve up to dimension 64; above that, shifted power iteration
    (shift by the max absolute row sum keeps the target eigenvalue
    dominant), tolerance 1e-9.
    """
    d = M.dim
    if d == 0:
        return 0.0
    A = M.entries
    if d <= _DENSE_EIG_DIM:
        ev = np.linalg.eigvals(A)
        if np.max(np.abs(ev.imag)) > 1e-8:
            raise NumericFailureError("influence spectrum unexpectedly complex")
        return float(np.max(ev.real))
    shift = M.max_abs_row_sum()
    B = A + shift * np.eye(d)
    x = np.ones(d) / math.sqrt(d)
    prev = 0.0
    for _ in range(_POWER_MAX_ITERS):
        y = B @ x
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return -shift
        x = y / nrm
        est = float(x @ (B @ x))
        if abs(est - prev) < _POWER_TOL:
            return est - shift
        prev = est
    raise NumericFailureError("power iteration did not converge")


def spectral_independence_scan(g: Graph, m: ModelSpec, sites=None,
                               pinning_budget: int = 100_000, seed: int = 0):
    """Max of lambda1 over conditionings of the (marginal) law on ``sites``.

    Enumerates every (S, tau) pair when 3^|sites| fits the budget, otherwise
    draws a seeded random sample of pinnings.  Returns (eta_observed,
    worst_pinning, enumerated_count).
    """
    if sites is None:
        sites = tuple(range(g.n if m.vertex_model else len(g.edges)))
    sites = tuple(sites)
    full = exact_distribution(g, m)
    marg = full.restrict(sites)
    k = len(sites)
    best = -math.inf
    worst = None
    count = 0

    def consider(pins_local):
        nonlocal best, worst, count
        table = {}
        for o, p in zip(marg.outcomes, marg.probabilities):
            if all(o[s] == v for s, v in pins_local.items()):
                table[o] = table.get(o, 0.0) + float(p)
        tot = sum(table.values())
        if tot <= 0 or len(table) < 2:
            return
        cond = DiscreteDistribution(
            sites=k, outcomes=tuple(sorted(table)),
            probabilities=tuple(table[o] / tot for o in sorted(table)), Z=tot)
        im = influence_matrix_from_dist(cond, Pinning(pins_local))
        val = lambda1(im)
        count += 1
        if val > best:
            best = val
            worst = dict(pins_local)

    if 3 ** k <= pinning_budget:
        for choice in iproduct((None, 0, 1), repeat=k):
            pins = {i: c for i, c in enumerate(choice) if c is not None}
            if len(pins) >= k:  # need at least two free sites for a matrix
                continue
            consider(pins)
    else:
        stream = PhiloxStream(seed)
        for trial in range(pinning_budget):
            pins = {}
            for i in range(k):
                c = stream.rand_below(3, trial, PHASE_RESAMPLE, first_draw=4 * i)
                if c < 2:
                    pins[i] = c
            if len(pins) >= k:
                continue
            consider(pins)
    return (best if worst is not None else 0.0), worst, count


# ---------------------------------------------------------------------------
# contraction checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionContext:
    """Constants of the amortised contraction inequality for one model.

    hard-core: 1/chi = 1 - (d-1)/2 log(1 + 1/(d-1)), potential
    1/sqrt(y(1+y)); matchings: 1/chi = 1 - 1/(4 gamma d), potential
    1/sqrt(x(2-x)).  a is the conjugate exponent: 1/chi + 1/a = 1.

    ``in_regime`` records whether the parameters sit inside the regime with
    a guaranteed uniform bound; the check may be run outside it on purpose,
    to witness that the strict inequality breaks.
    """

    kind: str
    d: float
    param: float
    chi: float
    a: float
    in_regime: bool = True


def contraction_context(kind: str, d: float, param: float) -> ContractionContext:
    if d <= 1:
        raise InvalidParameterError("contraction analysis needs d > 1")
    if param <= 0:
        raise InvalidParameterError("model parameter must be positive")
    if kind == HARDCORE:
        inv_chi = 1.0 - 0.5 * (d - 1.0) * math.log1p(1.0 / (d - 1.0))
        in_regime = param < lambda_c(d)
    elif kind == MATCHINGS:
        inv_chi = 1.0 - 1.0 / (4.0 * param * d)
        if inv_chi <= 0:
            raise InvalidParameterError(
                "4*gamma*d must exceed 1 for the contraction exponent")
        in_regime = True
    else:
        raise InvalidParameterError(f"no contraction context for model {kind!r}")
    chi = 1.0 / inv_chi
    return ContractionContext(kind=kind, d=d, param=param, chi=chi,
                              a=chi / (chi - 1.0), in_regime=in_regime)


def _phi_hardcore(y: float) -> float:
    return 1.0 / math.sqrt(y * (1.0 + y))


def _phi_matchings(x: float) -> float:
    return 1.0 / math.sqrt(x * (2.0 - x))


def contraction_statistic(ctx: ContractionContext, values) -> float:
    """The amortised one-level statistic LHS^(chi/a) * d for one tuple of
    child values; the regime guarantee is a uniform bound < 1."""
    a, chi, d = ctx.a, ctx.chi, ctx.d
    if ctx.kind == HARDCORE:
        lam = ctx.param
        x = lam
        for xi in values:
            x /= 1.0 + xi
        lhs = _phi_hardcore(x) ** a * sum(
            (x / ((1.0 + xi) * _phi_hardcore(xi))) ** a for xi in values)
    else:
        gamma = ctx.param
        R = 1.0 / (1.0 + gamma * sum(values))
        lhs = _phi_matchings(R) ** a * sum(
            (gamma * R * R / _phi_matchings(Rj)) ** a for Rj in values)
    return lhs ** (chi / a) * d


def contraction_check(ctx: ContractionContext, trials: int, k_max: int,
                      seed: int = 0):
    """Randomised sweep of the contraction statistic over child tuples.

    hard-core children are drawn from (0, lambda]; matchings from (0, 1].
    Returns (max statistic observed, pass flag); pass means strictly below 1
    on every trial.
    """
    if trials < 1 or k_max < 1:
        raise InvalidParameterError("trials and k_max must be >= 1")
    stream = PhiloxStream(seed)
    top = -math.inf
    hi = ctx.param if ctx.kind == HARDCORE else 1.0
    for t in range(trials):
        k = 1 + stream.rand_below(k_max, t, PHASE_RESAMPLE, first_draw=0)
        vals = []
        for i in range(k):
            u = stream.uniform(t, 64 + i, PHASE_RESAMPLE)
            vals.append(max(u, 1e-12) * hi)
        s = contraction_statistic(ctx, vals)
        if s > top:
            top = s
    return top, top < 1.0


# ---------------------------------------------------------------------------
# random-graph property verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyConfig:
    """Parameters of the four graph checks.

    The ball-size bound and ball-excess cap carry desk-scale margins
    (slack 4x on d^R log n, excess cap 6 instead of the asymptotic 1):
    the asymptotic forms only dominate once log n swamps the maximum
    degree, far beyond desk-size n.  Both stay configurable, and the
    adversarial instances the check exists for exceed them by orders of
    magnitude.
    """

    d: float
    eps: float = 1.0
    delta: float = 0.5
    D: float | None = None
    ell: int = 6
    M: float | None = None
    ball_size_slack: float = 4.0
    ball_excess_cap: int = 6
    component_size_c: float = 1.5 / math.e
    enumeration_cap: int = 2_000_000

    def resolved_D(self) -> float:
        return self.D if self.D is not None else 20.0 * max(1.0, self.d)

    def resolved_M(self) -> float:
        if self.M is not None:
            return self.M
        return max(10.0 * self.d, 50.0 * (1.0 + math.log(self.d)))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: object = None
    stats: dict = field(default_factory=dict)
    inconclusive: bool = False


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def inconclusive(self) -> bool:
        return any(c.inconclusive for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_graph(g: Graph, d: float, config: VerifyConfig | None = None) -> VerificationReport:
    """Run the four efficiently-checkable properties that guarantee the
    sampler's near-linear behaviour on a sparse random graph.

    (a) every radius-R ball is small and nearly tree-like;
    (b) every vertex passes the eps-goodness level-count test;
    (c) components induced by high-degree vertices are logarithmic with
        bounded tree-excess;
    (d) every connected set of the critical size has bounded degree sum
        (capped enumeration; cap overflow marks the check inconclusive).
    """
    if config is None:
        config = VerifyConfig(d=d)
    if config.d != d:
        config = VerifyConfig(**{**config.__dict__, "d": d})
    n = g.n
    logn = math.log(n) if n > 1 else 1.0
    checks = []

    # (a) ball size / tree-excess
    R_ball = default_radius(n) + 1  # floor((log log n)^2)
    size_cap = config.ball_size_slack * (d ** R_ball) * logn
    witness = None
    max_ball = 0
    max_excess = 0
    for v in range(n):
        B = ball(g, v, R_ball)
        max_ball = max(max_ball, len(B))
        if len(B) > size_cap:
            witness = ("ball-size", v, len(B))
            break
        inside = set(B)
        edges_in = sum(1 for x in B for y in g.adj[x] if y in inside) // 2
        excess = edges_in - len(B) + 1  # connected by construction
        max_excess = max(max_excess, excess)
        if excess > config.ball_excess_cap:
            witness = ("ball-excess", v, excess)
            break
    checks.append(CheckResult(
        name="ball", passed=witness is None, witness=witness,
        stats={"radius": R_ball, "size_cap": size_cap, "max_ball": max_ball,
               "max_excess": max_excess}))

    # (b) eps-goodness of every vertex
    witness = None
    worst = 0.0
    R_good = default_radius(n)
    for v in range(n):
        s_hat, good, threshold = epsilon_good_check(g, v, d, config.eps, R_good)
        worst = max(worst, s_hat)
        if not good:
            witness = ("not-eps-good", v, s_hat)
            break
    checks.append(CheckResult(
        name="eps-good", passed=witness is None, witness=witness,
        stats={"radius": R_good, "worst": worst,
               "threshold": config.eps * logn}))

    # (c) high-degree components: size and tree-excess
    D = config.resolved_D()
    part = degree_partition(g, D)
    decomp = induced_components(g, part.high)
    size_cap_c = config.component_size_c * logn
    witness = None
    max_size = 0
    max_exc = 0
    for comp in decomp.components:
        max_size = max(max_size, len(comp.vertices))
        max_exc = max(max_exc, comp.tree_excess)
        if len(comp.vertices) > size_cap_c:
            witness = ("component-size", comp.vertices[:12], len(comp.vertices))
            break
        if comp.tree_excess > config.ell:
            witness = ("component-excess", comp.vertices[:12], comp.tree_excess)
            break
    checks.append(CheckResult(
        name="high-components", passed=witness is None, witness=witness,
        stats={"D": D, "size_cap": size_cap_c, "ell": config.ell,
               "count": len(decomp.components), "max_size": max_size,
               "max_excess": max_exc}))

    # (d) degree sums of connected sets of the critical size
    k_d = max(1, math.ceil(config.delta * logn))
    Delta = 1.0 / (config.delta * math.log(1.0 / config.delta))
    bound = config.resolved_M() * Delta * k_d
    witness = None
    inconclusive = False
    enumerated = 0
    worst_deg = 0
    try:
        for v in range(n):
            budget = config.enumeration_cap - enumerated
            if budget <= 0:
                raise EnumerationOverflowError("global enumeration cap spent")
            sets = connected_sets_from(g, v, k_d, budget, min_vertex=v)
            enumerated += len(sets)
            for S in sets:
                ds = sum(g.degree(x) for x in S)
                worst_deg = max(worst_deg, ds)
                if ds > bound:
                    witness = ("degree-sum", tuple(sorted(S)), ds)
                    raise StopIteration
    except StopIteration:
        pass
    except EnumerationOverflowError:
        inconclusive = True
    checks.append(CheckResult(
        name="connected-degree-sum",
        passed=witness is None and not inconclusive,
        witness=witness,
        stats={"set_size": k_d, "bound": bound, "enumerated": enumerated,
               "worst": worst_deg},
        inconclusive=inconclusive))

    return VerificationReport(tuple(checks))
