"""Glauber dynamics on low-degree sites, exact finalisation, and the
mixing-time / entropy-factorisation formulas.

The sampler runs single-site Glauber on the update-site set (vertices of
degree <= D, or edges with both endpoints of degree <= D for matchings),
resampling each picked site from its conditional law on the whole graph via
the component DP, then extends the final state to all sites exactly,
component by component.  All randomness is addressed Philox (see rng.py), so
``sample_batch`` replays many chains vectorised and bit-identical to
per-run ``sample`` calls with derived seeds.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dp import (
    DEFAULT_EXCESS_CAP,
    conditional_marginal_dp,
    matching_marginal_dp,
    prepare_matching_component,
    prepare_vertex_component,
    sample_matching_prepared,
    sample_vertex_prepared,
)
from .errors import (
    ComponentTooComplexError,
    DegenerateInstanceError,
    InvalidParameterError,
)
from .graphs import (
    Graph,
    VertexPartition,
    component_of_low_vertex,
    degree_partition,
    induced_components,
    subgraph_components,
)
from .models import MATCHINGS, Configuration, ModelSpec, Pinning
from .rng import (
    PHASE_FINAL,
    PHASE_MAIN,
    PHASE_RESAMPLE,
    PHASE_SITE,
    PhiloxStream,
    batch_words,
    philox4x64_batch,
    uniform_from_word,
)

_BATCH_TABLE_BITS = 22  # dependency-state tables above 2^22 entries refuse to build


# ---------------------------------------------------------------------------
# schedules and bounds
# ---------------------------------------------------------------------------

def _ceil_guarded(x: float) -> int:
    """Ceiling with a few-ulp guard so values that are exact integers up to
    float rounding do not get bumped to the next integer."""
    return math.ceil(x - 4.0 * abs(x) * sys.float_info.epsilon)


def mixing_T(n: int, theta: float, eps: float) -> int:
    """ceil(n^(1+theta/2) log(1/eps)), clamped to at least one step."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if theta <= 0:
        raise InvalidParameterError("theta must be positive")
    if not 0 < eps <= 1:
        raise InvalidParameterError("eps must lie in (0,1]")
    t = _ceil_guarded(n ** (1.0 + theta / 2.0) * math.log(1.0 / eps))
    return max(1, t)


@dataclass(frozen=True)
class Schedule:
    theta: float
    eps: float
    T: int
    derived: bool = True  # False when T was overridden by the caller

    def __post_init__(self):
        if self.T < 1:
            raise InvalidParameterError("schedule needs T >= 1")


def make_schedule(n: int, theta: float = 1.0, eps: float = 0.05,
                  T_override: int | None = None) -> Schedule:
    if T_override is not None:
        return Schedule(theta=theta, eps=eps, T=max(1, T_override), derived=False)
    return Schedule(theta=theta, eps=eps, T=mixing_T(n, theta, eps))


@dataclass(frozen=True)
class FactorizationBound:
    """Uniform-block entropy-factorisation multiplier C_r with the sequences
    that define it: alpha_k = max{0, 1 - 4 eta / (b^2 (n-1-k))},
    Gamma_k = prod_{j<k} alpha_j, C_r = (r/n) sum Gamma / tail-sum Gamma."""

    n: int
    r: int
    eta: float
    b: float
    alphas: tuple
    gammas: tuple
    cr: float

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.cr)


def cr_bound(n: int, r: int, eta: float, b: float) -> FactorizationBound:
    if not 1 <= r <= n:
        raise InvalidParameterError("need 1 <= r <= n")
    if eta < 0:
        raise InvalidParameterError("eta must be nonnegative")
    if not 0 < b < 1:
        raise InvalidParameterError("b must lie in (0,1)")
    alphas = []
    for k in range(n - 1):
        alphas.append(max(0.0, 1.0 - 4.0 * eta / (b * b * (n - 1 - k))))
    gammas = [1.0]
    for a in alphas:
        gammas.append(gammas[-1] * a)
    gammas = gammas[:n]
    s_all = sum(gammas)
    s_tail = sum(gammas[n - r:])
    if s_tail <= 0.0:
        cr = math.inf
    else:
        cr = (r * s_all) / (n * s_tail)
    return FactorizationBound(n=n, r=r, eta=eta, b=b, alphas=tuple(alphas),
                              gammas=tuple(gammas), cr=cr)


def tmix_bound(C_r: float, n: int, r: int, mu_min: float, eps: float) -> int:
    """ceil(C_r (n/r) (log log(1/mu_min) + log(1/(2 eps^2)))).

    The eps term is evaluated as -log 2 - 2 log eps, which is exact at the
    boundary cases (for example eps = 1/sqrt(2)).
    """
    if not 0 < mu_min < 1:
        raise InvalidParameterError("mu_min must lie in (0,1)")
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    inner = math.log(math.log(1.0 / mu_min)) - math.log(2.0) - 2.0 * math.log(eps)
    return _ceil_guarded(C_r * (n / r) * inner)


# ---------------------------------------------------------------------------
# update-site sets and the sampler context
# ---------------------------------------------------------------------------

def update_site_set(g: Graph, m: ModelSpec, D: float):
    """Sites the chain resamples: vertices of degree <= D, or for matchings
    the edges whose both endpoints have degree <= D."""
    if D < 0:
        raise InvalidParameterError("D must be nonnegative")
    if m.vertex_model:
        sites = tuple(v for v in range(g.n) if g.degree(v) <= D)
    else:
        sites = tuple(i for i, (u, v) in enumerate(g.edges)
                      if g.degree(u) <= D and g.degree(v) <= D)
    if not sites:
        raise DegenerateInstanceError(
            "no update sites at this degree threshold; fall back to "
            "whole-graph component sampling")
    return sites


def default_degree_threshold(g: Graph) -> float:
    """20 max(1, mean degree): generous enough to keep the update set large
    while high-degree components stay tiny on sparse inputs."""
    return 20.0 * max(1.0, g.mean_degree())


class _SiteInfo:
    __slots__ = ("fast", "dep", "comp", "nbr_pos", "ptab")

    def __init__(self, fast, dep, comp, nbr_pos, ptab):
        self.fast = fast
        self.dep = dep          # dependency site positions (sorted)
        self.comp = comp        # Component for the DP path, else None
        self.nbr_pos = nbr_pos  # fast path: positions of neighbor sites
        self.ptab = ptab        # fast path tables (model specific)


class SamplerContext:
    """Everything precomputed for a (graph, model, D) triple: the update-site
    set, per-site conditional structure, and the finalisation components.

    Raises ComponentTooComplexError at construction when any component the
    sampler would touch exceeds the excess cap, and DegenerateInstanceError
    when the update-site set is empty.
    """

    def __init__(self, g: Graph, m: ModelSpec, D: float,
                 k_max: int = DEFAULT_EXCESS_CAP):
        self.g = g
        self.m = m
        self.D = D
        self.k_max = k_max
        self.partition = degree_partition(g, D)
        self.sites = update_site_set(g, m, D)
        self.site_pos = {s: i for i, s in enumerate(self.sites)}
        self.n_sites = len(self.sites)
        self._marg_cache = {}
        self._fin_cache = {}
        if m.vertex_model:
            self._init_vertex()
        else:
            self._init_matchings()

    # -- vertex models ------------------------------------------------------

    def _init_vertex(self):
        g, m = self.g, self.m
        high = self.partition.high
        lam_or_beta = float(m.param)
        if m.kind == "hardcore":
            p_occ = lam_or_beta / (1.0 + lam_or_beta)
        self.info = []
        for u in self.sites:
            high_nbrs = [y for y in g.adj[u] if y in high]
            if not high_nbrs:
                nbr_pos = tuple(self.site_pos[y] for y in g.adj[u])
                if m.kind == "hardcore":
                    ptab = (p_occ,)
                else:
                    deg = len(nbr_pos)
                    ptab = tuple(
                        lam_or_beta ** c1 / (lam_or_beta ** c1 + lam_or_beta ** (deg - c1))
                        for c1 in range(deg + 1))
                self.info.append(_SiteInfo(True, nbr_pos, None, nbr_pos, ptab))
            else:
                comp, boundary = component_of_low_vertex(g, self.partition, u)
                if comp.tree_excess > self.k_max:
                    raise ComponentTooComplexError(
                        f"component at vertex {u} has tree-excess "
                        f"{comp.tree_excess} > {self.k_max}", component=comp)
                dep = tuple(sorted(self.site_pos[b] for b in boundary))
                self.info.append(_SiteInfo(False, dep, comp, None, None))
        # finalisation: components of the high-degree subgraph
        decomp = induced_components(g, high)
        self.fin_comps = []
        for comp in decomp.components:
            if comp.tree_excess > self.k_max:
                raise ComponentTooComplexError(
                    f"high-degree component {comp.vertices[:8]}... has "
                    f"tree-excess {comp.tree_excess} > {self.k_max}",
                    component=comp)
            in_comp = set(comp.vertices)
            boundary = sorted({y for x in comp.vertices for y in g.adj[x]
                               if y not in in_comp})
            self.fin_comps.append((comp, tuple(boundary)))

    # -- matchings ----------------------------------------------------------

    def _init_matchings(self):
        g = self.g
        f_set = set(self.sites)
        outside = [e for i, e in enumerate(g.edges) if i not in f_set]
        self.outside_edges = outside
        touched = {x for e in outside for x in e}
        # edges of the high subgraph incident to each vertex
        out_adj = {}
        for a, b in outside:
            out_adj.setdefault(a, []).append((a, b))
            out_adj.setdefault(b, []).append((a, b))
        incident_f = {}
        for i in f_set:
            a, b = g.edges[i]
            incident_f.setdefault(a, []).append(i)
            incident_f.setdefault(b, []).append(i)
        gamma = float(self.m.param)
        p_match = gamma / (1.0 + gamma)
        self.info = []
        for i, eidx in enumerate(self.sites):
            x, y = g.edges[eidx]
            if x not in touched and y not in touched:
                nbr_pos = tuple(sorted(self.site_pos[j]
                                       for v in (x, y) for j in incident_f[v]
                                       if j != eidx))
                self.info.append(_SiteInfo(True, nbr_pos, None, nbr_pos, (p_match,)))
            else:
                comp = self._edge_component(eidx, out_adj)
                if comp.tree_excess > self.k_max:
                    raise ComponentTooComplexError(
                        f"component at edge {eidx} has tree-excess "
                        f"{comp.tree_excess} > {self.k_max}", component=comp)
                in_comp = set(comp.vertices)
                dep = sorted({self.site_pos[j] for v in in_comp
                              for j in incident_f.get(v, ()) if j != eidx})
                self.info.append(_SiteInfo(False, tuple(dep), comp, None, None))
        decomp = subgraph_components(g.n, outside)
        self.fin_comps = []
        for comp in decomp.components:
            if comp.tree_excess > self.k_max:
                raise ComponentTooComplexError(
                    f"high-edge component {comp.vertices[:8]}... has "
                    f"tree-excess {comp.tree_excess} > {self.k_max}",
                    component=comp)
            in_comp = set(comp.vertices)
            boundary = sorted({j for v in in_comp
                               for j in incident_f.get(v, ())})
            self.fin_comps.append((comp, tuple(boundary)))

    def _edge_component(self, eidx, out_adj):
        """Component of edge ``eidx`` in (outside edges + this edge)."""
        x, y = self.g.edges[eidx]
        edges = {(x, y)}
        stack = [x, y]
        seen = {x, y}
        while stack:
            v = stack.pop()
            for a, b in out_adj.get(v, ()):
                edges.add((a, b))
                for w in (a, b):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
        decomp = subgraph_components(self.g.n, sorted(edges))
        assert len(decomp.components) == 1
        return decomp.components[0]

    # -- conditional law ----------------------------------------------------

    def conditional_p1(self, i: int, values) -> float:
        """P(site i takes spin 1 | the other update sites), the law every
        chain step resamples from."""
        info = self.info[i]
        if info.fast:
            if self.m.kind == "hardcore":
                for j in info.nbr_pos:
                    if values[j]:
                        return 0.0
                return info.ptab[0]
            if self.m.kind == "ising":
                c1 = 0
                for j in info.nbr_pos:
                    c1 += values[j]
                return info.ptab[c1]
            for j in info.nbr_pos:  # matchings: blocked endpoint
                if values[j]:
                    return 0.0
            return info.ptab[0]
        key = (i, tuple(values[p] for p in info.dep))
        hit = self._marg_cache.get(key)
        if hit is not None:
            return hit
        pins = Pinning({self.sites[p]: values[p] for p in info.dep})
        if self.m.vertex_model:
            p1 = conditional_marginal_dp(self.g, info.comp, pins, self.m,
                                         self.sites[i], self.k_max)
        else:
            p1 = matching_marginal_dp(self.g, info.comp, pins, self.m,
                                      self.sites[i], self.k_max)
        self._marg_cache[key] = p1
        return p1

    def finalize(self, values, key: int):
        """Extend the chain state on the update sites to all sites, sampling
        each remaining component exactly (PHASE_FINAL, indexed by component)."""
        g = self.g
        stream = PhiloxStream(key)
        if self.m.vertex_model:
            full = [0] * g.n
            for s, v in zip(self.sites, values):
                full[s] = v
            for ci, (comp, boundary) in enumerate(self.fin_comps):
                bstate = tuple(full[b] for b in boundary)
                prep = self._fin_cache.get((ci, bstate))
                if prep is None:
                    pins = Pinning({b: full[b] for b in boundary})
                    prep = prepare_vertex_component(g, comp, pins, self.m,
                                                    self.k_max)
                    self._fin_cache[(ci, bstate)] = prep
                sampled = sample_vertex_prepared(
                    prep, lambda j: stream.uniform(ci, j, PHASE_FINAL))
                for v, s in sampled.items():
                    full[v] = s
            return Configuration("vertex", tuple(full))
        full = [0] * len(g.edges)
        for s, v in zip(self.sites, values):
            full[s] = v
        for ci, (comp, boundary) in enumerate(self.fin_comps):
            bstate = tuple(full[b] for b in boundary)
            prep = self._fin_cache.get((ci, bstate))
            if prep is None:
                pins = Pinning({b: full[b] for b in boundary})
                prep = prepare_matching_component(g, comp, pins, self.m,
                                                  self.k_max)
                self._fin_cache[(ci, bstate)] = prep
            sampled = sample_matching_prepared(
                prep, lambda j: stream.uniform(ci, j, PHASE_FINAL))
            for eidx, s in sampled.items():
                full[eidx] = s
        return Configuration("edge", tuple(full))


# ---------------------------------------------------------------------------
# chain state and steps
# ---------------------------------------------------------------------------

@dataclass
class ChainState:
    """A single chain: values over the update sites, step counter, seed key.

    The RNG needs no stored stream state; every draw is addressed by
    (key, step, phase).
    """

    sites: tuple
    values: list
    t: int
    key: int
    ctx: SamplerContext | None = field(default=None, repr=False)


def make_chain(g: Graph, m: ModelSpec, D: float, seed: int,
               k_max: int = DEFAULT_EXCESS_CAP,
               ctx: SamplerContext | None = None) -> ChainState:
    """Fresh chain at the all-zero configuration (empty independent set /
    empty matching)."""
    if ctx is None:
        ctx = SamplerContext(g, m, D, k_max)
    return ChainState(sites=ctx.sites, values=[0] * ctx.n_sites, t=0,
                      key=seed, ctx=ctx)


def glauber_step(g: Graph, m: ModelSpec, p: VertexPartition | None,
                 state: ChainState) -> ChainState:
    """One single-site update: pick a uniform update site, resample its spin
    from the conditional law on the whole graph given the other sites."""
    ctx = state.ctx
    if ctx is None:
        ctx = SamplerContext(g, m, p.threshold if p is not None
                             else default_degree_threshold(g))
        state.ctx = ctx
    t = state.t + 1
    stream = PhiloxStream(state.key)
    flip = stream.uniform(t, 0, PHASE_MAIN)
    i = stream.rand_below(ctx.n_sites, t, PHASE_MAIN, first_draw=1)
    p1 = ctx.conditional_p1(i, state.values)
    state.values[i] = 1 if flip < p1 else 0
    state.t = t
    return state


def _run_chain(ctx: SamplerContext, key: int, T: int, values=None,
               batch: int = 1 << 13):
    """T steps of single-site Glauber, batching the Philox evaluations.

    Produces exactly the same trajectory as T calls of glauber_step.
    """
    nU = ctx.n_sites
    if values is None:
        values = [0] * nU
    mask = (1 << (nU - 1).bit_length()) - 1 if nU > 1 else 0
    key_arr = np.uint64(key)
    dom = np.uint64(rng.DOMAIN_KEY)
    info = ctx.info
    kind = ctx.m.kind
    cond = ctx.conditional_p1
    for t0 in range(1, T + 1, batch):
        hi = min(t0 + batch, T + 1)
        steps = np.arange(t0, hi, dtype=np.uint64)
        w = philox4x64_batch(steps, np.uint64(0), np.uint64(PHASE_MAIN),
                             np.uint64(0), key_arr, dom)
        flips = uniform_from_word(w[0])
        # site picks: draws 1,2,3 come from words 1..3, then later blocks
        idx = (w[1] & np.uint64(mask)).astype(np.int64)
        pending = idx >= nU
        draw = 2
        while pending.any():
            sel = np.flatnonzero(pending)
            if draw <= 3:
                cand = (w[draw][sel] & np.uint64(mask)).astype(np.int64)
            else:
                blk = philox4x64_batch(steps[sel], np.uint64(draw >> 2),
                                       np.uint64(PHASE_MAIN), np.uint64(0),
                                       key_arr, dom)
                cand = (blk[draw & 3] & np.uint64(mask)).astype(np.int64)
            idx[sel] = cand
            pending = idx >= nU
            draw += 1
        idx_l = idx.tolist()
        flips_l = flips.tolist()
        if kind == "hardcore":
            for k in range(len(idx_l)):
                i = idx_l[k]
                inf = info[i]
                if inf.fast:
                    occupied = 0
                    for j in inf.nbr_pos:
                        if values[j]:
                            occupied = 1
                            break
                    values[i] = 0 if occupied else (1 if flips_l[k] < inf.ptab[0] else 0)
                else:
                    values[i] = 1 if flips_l[k] < cond(i, values) else 0
        elif kind == "ising":
            for k in range(len(idx_l)):
                i = idx_l[k]
                inf = info[i]
                if inf.fast:
                    c1 = 0
                    for j in inf.nbr_pos:
                        c1 += values[j]
                    values[i] = 1 if flips_l[k] < inf.ptab[c1] else 0
                else:
                    values[i] = 1 if flips_l[k] < cond(i, values) else 0
        else:
            for k in range(len(idx_l)):
                i = idx_l[k]
                inf = info[i]
                if inf.fast:
                    blocked = 0
                    for j in inf.nbr_pos:
                        if values[j]:
                            blocked = 1
                            break
                    values[i] = 0 if blocked else (1 if flips_l[k] < inf.ptab[0] else 0)
                else:
                    values[i] = 1 if flips_l[k] < cond(i, values) else 0
    return values


def sample(g: Graph, m: ModelSpec, D: float | None = None,
           sched: Schedule | None = None, seed: int = 0,
           k_max: int = DEFAULT_EXCESS_CAP,
           ctx: SamplerContext | None = None) -> Configuration:
    """Run the full sampler: T main-loop steps on the update sites, then
    exact component-by-component finalisation over the remaining sites.

    Deterministic given (graph, model, D, schedule, seed).  When the
    update-site set is empty the whole graph is sampled exactly instead
    (feasible whenever every component passes the excess cap).
    """
    if D is None:
        D = default_degree_threshold(g)
    if ctx is None:
        try:
            ctx = SamplerContext(g, m, D, k_max)
        except DegenerateInstanceError:
            return perfect_sample_sparse(g, m, seed, k_max)
    if sched is None:
        sched = make_schedule(g.n)
    values = _run_chain(ctx, seed, sched.T)
    return ctx.finalize(values, seed)


def perfect_sample_sparse(g: Graph, m: ModelSpec, seed: int,
                          k_max: int = DEFAULT_EXCESS_CAP) -> Configuration:
    """Exact sample over the whole graph, component by component; intended
    for graphs whose components all pass the DP excess cap."""
    stream = PhiloxStream(seed)
    if m.vertex_model:
        decomp = induced_components(g, range(g.n))
        full = [0] * g.n
        for ci, comp in enumerate(decomp.components):
            sampled = _sample_component(g, comp, None, m, stream, ci, k_max)
            for v, s in sampled.items():
                full[v] = s
        return Configuration("vertex", tuple(full))
    decomp = subgraph_components(g.n, g.edges)
    full = [0] * len(g.edges)
    for ci, comp in enumerate(decomp.components):
        prep = prepare_matching_component(g, comp, None, m, k_max)
        sampled = sample_matching_prepared(
            prep, lambda j: stream.uniform(ci, j, PHASE_FINAL))
        for eidx, s in sampled.items():
            full[eidx] = s
    return Configuration("edge", tuple(full))


def _sample_component(g, comp, pins, m, stream, ci, k_max):
    prep = prepare_vertex_component(g, comp, pins, m, k_max)
    return sample_vertex_prepared(
        prep, lambda j: stream.uniform(ci, j, PHASE_FINAL))


def r_block_step(g: Graph, m: ModelSpec, sites, r: int,
                 state: ChainState) -> ChainState:
    """One r-uniform-block update: resample a uniform r-subset of the update
    sites exactly from its conditional law given the rest."""
    ctx = state.ctx
    if ctx is None:
        raise InvalidParameterError("r_block_step needs a context-backed chain")
    nU = ctx.n_sites
    if not 1 <= r <= nU:
        raise InvalidParameterError("need 1 <= r <= |sites|")
    t = state.t + 1
    stream = PhiloxStream(state.key)
    # partial Fisher-Yates; selection i gets its own rejection window
    arr = list(range(nU))
    for i in range(r):
        j = i + stream.rand_below(nU - i, t, PHASE_SITE, first_draw=64 * i)
        arr[i], arr[j] = arr[j], arr[i]
    chosen = sorted(arr[:r])
    values = state.values
    g_, m_ = ctx.g, ctx.m
    draw_stride = 1 << 20
    if m_.vertex_model:
        s_verts = {ctx.sites[i] for i in chosen}
        region = s_verts | set(ctx.partition.high)
        decomp = induced_components(g_, region)
        for ci, comp in enumerate(decomp.components):
            in_comp = set(comp.vertices)
            if not in_comp & s_verts:
                continue  # pure high-degree component; nothing to resample
            if comp.tree_excess > ctx.k_max:
                raise ComponentTooComplexError(
                    "resampled block component exceeds the excess cap",
                    component=comp)
            pins = {}
            for x in comp.vertices:
                for y in g_.adj[x]:
                    if y not in in_comp and y in ctx.site_pos:
                        pins[y] = values[ctx.site_pos[y]]
            prep = prepare_vertex_component(g_, comp, Pinning(pins), m_, ctx.k_max)
            sampled = sample_vertex_prepared(
                prep,
                lambda j, ci=ci: stream.uniform(t, ci * draw_stride + j,
                                                PHASE_RESAMPLE))
            for v, s in sampled.items():
                if v in ctx.site_pos:
                    values[ctx.site_pos[v]] = s
    else:
        s_edges = [g_.edges[ctx.sites[i]] for i in chosen]
        region_edges = list(ctx.outside_edges) + s_edges
        decomp = subgraph_components(g_.n, region_edges)
        chosen_idx = {ctx.sites[i] for i in chosen}
        chosen_verts = {x for e in s_edges for x in e}
        for ci, comp in enumerate(decomp.components):
            in_comp = set(comp.vertices)
            if not in_comp & chosen_verts:
                continue  # no resampled edge in this component
            if comp.tree_excess > ctx.k_max:
                raise ComponentTooComplexError(
                    "resampled block component exceeds the excess cap",
                    component=comp)
            pins = {}
            for eidx in ctx.sites:
                if eidx in chosen_idx:
                    continue
                a, b = g_.edges[eidx]
                if a in in_comp or b in in_comp:
                    pins[eidx] = values[ctx.site_pos[eidx]]
            prep = prepare_matching_component(g_, comp, Pinning(pins), m_,
                                              ctx.k_max)
            sampled = sample_matching_prepared(
                prep,
                lambda j, ci=ci: stream.uniform(t, ci * draw_stride + j,
                                                PHASE_RESAMPLE))
            for eidx, s in sampled.items():
                if eidx in chosen_idx:
                    values[ctx.site_pos[eidx]] = s
    state.t = t
    return state


# ---------------------------------------------------------------------------
# batch sampler (vectorised across chains, bit-identical to per-run sample)
# ---------------------------------------------------------------------------

def sample_batch(g: Graph, m: ModelSpec, D: float | None, sched: Schedule,
                 seed: int, runs: int,
                 k_max: int = DEFAULT_EXCESS_CAP) -> list:
    """``runs`` independent samples; chain i is keyed by seed+i and equals
    sample(g, m, D, sched, seed + i) bit for bit."""
    if D is None:
        D = default_degree_threshold(g)
    try:
        ctx = SamplerContext(g, m, D, k_max)
    except DegenerateInstanceError:
        return [perfect_sample_sparse(g, m, seed + i, k_max) for i in range(runs)]
    nU = ctx.n_sites
    tables = _build_batch_tables(ctx)
    keys = (np.uint64(seed) + np.arange(runs, dtype=np.uint64))
    X = np.zeros((runs, nU), dtype=np.int8)
    mask = np.uint64((1 << (nU - 1).bit_length()) - 1 if nU > 1 else 0)
    dom = np.uint64(rng.DOMAIN_KEY)
    for t in range(1, sched.T + 1):
        w = philox4x64_batch(np.uint64(t), np.uint64(0), np.uint64(PHASE_MAIN),
                             np.uint64(0), keys, dom)
        flips = uniform_from_word(w[0])
        idx = (w[1] & mask).astype(np.int64)
        pending = idx >= nU
        draw = 2
        while pending.any():
            sel = np.flatnonzero(pending)
            if draw <= 3:
                cand = (w[draw][sel] & mask).astype(np.int64)
            else:
                blk = philox4x64_batch(np.uint64(t), np.uint64(draw >> 2),
                                       np.uint64(PHASE_MAIN), np.uint64(0),
                                       keys[sel], dom)
                cand = (blk[draw & 3] & mask).astype(np.int64)
            idx[sel] = cand
            pending = idx >= nU
            draw += 1
        for i in np.unique(idx):
            rows = np.flatnonzero(idx == i)
            mode, dep, data = tables[i]
            if len(dep) == 0:
                p = data[0]
            else:
                states = X[np.ix_(rows, dep)]
                if mode == "block":      # hard-core / matchings fast path
                    p = np.where(states.any(axis=1), 0.0, data[0])
                elif mode == "count":    # Ising fast path
                    p = data[states.sum(axis=1)]
                else:                    # DP table over dependency states
                    p = data[states.astype(np.int64) @ (1 << np.arange(len(dep), dtype=np.int64))]
            X[rows, i] = flips[rows] < p
    # finalisation per run, scalar (memoised component preparations)
    out = []
    for i in range(runs):
        out.append(ctx.finalize(X[i].tolist(), int(keys[i])))
    return out


def _build_batch_tables(ctx: SamplerContext):
    """Per site: (mode, dependency positions, data) where mode selects the
    vectorised conditional: "block" (zero when any dependency is set),
    "count" (lookup by number of set dependencies) or "table" (lookup over
    all dependency states, filled from the scalar conditional)."""
    tables = []
    for i, info in enumerate(ctx.info):
        if info.fast:
            dep = np.array(info.nbr_pos, dtype=np.int64)
            if ctx.m.kind == "ising":
                tables.append(("count", dep, np.array(info.ptab)))
            else:
                tables.append(("block", dep, np.array([info.ptab[0]])))
            continue
        dep = tuple(info.dep)
        if len(dep) > _BATCH_TABLE_BITS:
            raise InvalidParameterError(
                f"site {i} depends on {len(dep)} sites; table too large")
        probe = [0] * ctx.n_sites
        table = np.empty(1 << len(dep), dtype=np.float64)
        for state in range(1 << len(dep)):
            for b, pos in enumerate(dep):
                probe[pos] = (state >> b) & 1
            table[state] = ctx.conditional_p1(i, probe)
        for pos in dep:
            probe[pos] = 0
        tables.append(("table", np.array(dep, dtype=np.int64), table))
    return tables


# ---------------------------------------------------------------------------
# exact transition operator (for stationarity / reversibility tests)
# ---------------------------------------------------------------------------

def chain_state_space(ctx: SamplerContext):
    """All feasible update-site configurations of the chain."""
    from itertools import product as iproduct

    g, m = ctx.g, ctx.m
    states = []
    if m.kind == "hardcore":
        edges_in_u = [(ctx.site_pos[u], ctx.site_pos[v]) for u, v in g.edges
                      if u in ctx.site_pos and v in ctx.site_pos]
        for cand in iproduct((0, 1), repeat=ctx.n_sites):
            if all(not (cand[a] and cand[b]) for a, b in edges_in_u):
                states.append(cand)
    elif m.kind == "ising":
        states = list(iproduct((0, 1), repeat=ctx.n_sites))
    else:
        by_vertex = {}
        for i, eidx in enumerate(ctx.sites):
            a, b = g.edges[eidx]
            by_vertex.setdefault(a, []).append(i)
            by_vertex.setdefault(b, []).append(i)
        for cand in iproduct((0, 1), repeat=ctx.n_sites):
            if all(sum(cand[i] for i in lst) <= 1 for lst in by_vertex.values()):
                states.append(cand)
    return states


def transition_matrix(ctx: SamplerContext, states=None):
    """Exact single-step transition matrix of the implemented Glauber update
    over the feasible chain states."""
    if states is None:
        states = chain_state_space(ctx)
    index = {s: k for k, s in enumerate(states)}
    nU = ctx.n_sites
    P = np.zeros((len(states), len(states)))
    for k, s in enumerate(states):
        vals = list(s)
        for i in range(nU):
            p1 = ctx.conditional_p1(i, vals)
            for spin, pr in ((1, p1), (0, 1.0 - p1)):
                if pr == 0.0:
                    continue
                nxt = list(s)
                nxt[i] = spin
                j = index.get(tuple(nxt))
                if j is None:
                    if pr > 1e-15:
                        raise InvalidParameterError(
                            "transition leaves the feasible state space")
                    continue
                P[k, j] += pr / nU
    return P, states
