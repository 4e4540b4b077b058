"""Exact conditional marginals and samples on tree-plus-excess components.

A component comes with a canonical spanning tree and k excess edges.  Every
computation enumerates the <= 4^k spin assignments of the excess-edge
endpoints (matching states of the excess edges themselves, for the
monomer-dimer model), runs a bottom-up pass over the spanning tree for each
assignment, and combines the assignments by their partition-function weight.
Messages are normalised at every vertex with a log-scale accumulator, so
components of a few hundred sites stay inside double range.

Sampling consumes addressed uniforms: draw 0 picks the excess assignment,
draw 1+i belongs to the i-th vertex of the rooted spanning tree, so a batch
replay makes exactly the same decisions as a single run.
"""

from __future__ import annotations

import math

from .errors import (
    ComponentTooComplexError,
    EmptySupportError,
    InvalidParameterError,
)
from .graphs import Component, Graph
from .models import HARDCORE, ISING, MATCHINGS, ModelSpec, Pinning
from .rng import PHASE_FINAL, PhiloxStream

DEFAULT_EXCESS_CAP = 12


def _edge_factor(m: ModelSpec):
    if m.kind == HARDCORE:
        return lambda s, t: 0.0 if (s and t) else 1.0
    if m.kind == ISING:
        beta = float(m.param)
        return lambda s, t: beta if s == t else 1.0
    raise InvalidParameterError("vertex-model factor requested for matchings")


def _site_factor(m: ModelSpec):
    if m.kind == HARDCORE:
        lam = float(m.param)
        return lambda s: lam if s else 1.0
    return lambda s: 1.0


def _root_order(comp: Component, root: int):
    """BFS order and parent map of the spanning tree rooted at ``root``."""
    adj = {v: [] for v in comp.vertices}
    for a, b in comp.tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {root: None}
    order = [root]
    queue = [root]
    while queue:
        x = queue.pop(0)
        for y in sorted(adj[x]):
            if y not in parent:
                parent[y] = x
                order.append(y)
                queue.append(y)
    if len(order) != len(comp.vertices):
        raise InvalidParameterError("component spanning tree is not connected")
    return order, parent


def _check_vertex_inputs(g: Graph, comp: Component, m: ModelSpec, k_max: int):
    if not m.vertex_model:
        raise InvalidParameterError("vertex DP called with an edge model")
    if comp.tree_excess > k_max:
        raise ComponentTooComplexError(
            f"component tree-excess {comp.tree_excess} exceeds cap {k_max}",
            component=comp)


def _external_field(g: Graph, comp: Component, pins: dict, m: ModelSpec):
    """Per-vertex spin weights from the model site factor and pinned
    outside neighbors; edges to unpinned outside vertices are not part of
    the restricted model."""
    ef = _edge_factor(m)
    sf = _site_factor(m)
    in_comp = set(comp.vertices)
    ext = {}
    for v in comp.vertices:
        w0, w1 = sf(0), sf(1)
        for y in g.adj[v]:
            if y in in_comp:
                continue
            spin = pins.get(y)
            if spin is not None:
                w0 *= ef(0, spin)
                w1 *= ef(1, spin)
        ext[v] = (w0, w1)
    return ext


def _tree_pass(comp, ext, ef, pins, order, parent, children):
    """Bottom-up messages over the rooted spanning tree.

    Returns (msgs, logscale) with msgs[v] the normalised (w0, w1) of the
    subtree at v, or None when the assignment has empty support.
    """
    msgs = {}
    logscale = 0.0
    for v in reversed(order):
        pin = pins.get(v)
        w0, w1 = ext[v]
        if pin == 0:
            w1 = 0.0
        elif pin == 1:
            w0 = 0.0
        for c in children[v]:
            c0, c1 = msgs[c]
            w0 *= ef(0, 0) * c0 + ef(0, 1) * c1
            w1 *= ef(1, 0) * c0 + ef(1, 1) * c1
        top = max(w0, w1)
        if top <= 0.0:
            return None, -math.inf
        msgs[v] = (w0 / top, w1 / top)
        logscale += math.log(top)
    return msgs, logscale


def _vertex_assignments(g: Graph, comp: Component, boundary: Pinning | None,
                        m: ModelSpec, root: int, k_max: int):
    """All excess-endpoint assignments with their log partition functions.

    Yields (logZ, pins, msgs, order, parent, children); assignments with
    empty support are skipped.
    """
    _check_vertex_inputs(g, comp, m, k_max)
    pins0 = dict(boundary.items()) if boundary is not None else {}
    ef = _edge_factor(m)
    ext = _external_field(g, comp, pins0, m)
    order, parent = _root_order(comp, root)
    children = {v: [] for v in comp.vertices}
    for v in order:
        p = parent[v]
        if p is not None:
            children[p].append(v)
    internal0 = {v: s for v, s in pins0.items() if v in set(comp.vertices)}
    W = sorted(set(x for e in comp.excess_edges for x in e) - set(internal0))
    results = []
    for a in range(1 << len(W)):
        pins = dict(internal0)
        for i, w in enumerate(W):
            pins[w] = (a >> i) & 1
        factor = 1.0
        for x, y in comp.excess_edges:
            factor *= ef(pins[x], pins[y])
        if factor == 0.0:
            continue
        msgs, logscale = _tree_pass(comp, ext, ef, pins, order, parent, children)
        if msgs is None:
            continue
        r0, r1 = msgs[root]
        total = r0 + r1
        if total <= 0.0:
            continue
        logz = logscale + math.log(total) + math.log(factor)
        results.append((logz, pins, msgs))
    if not results:
        raise EmptySupportError("boundary pins admit no valid configuration")
    return results, order, parent, children


def conditional_marginal_dp(g: Graph, comp: Component, boundary: Pinning | None,
                            m: ModelSpec, target: int,
                            k_max: int = DEFAULT_EXCESS_CAP) -> float:
    """Exact P(target = 1) in the model restricted to the component with the
    given boundary pins.  For the monomer-dimer model ``target`` is a graph
    edge index inside the component."""
    if m.kind == MATCHINGS:
        return matching_marginal_dp(g, comp, boundary, m, target, k_max)
    if target not in comp.vertices:
        raise InvalidParameterError(f"target {target} not in component")
    if boundary is not None and target in boundary.spins:
        raise InvalidParameterError(f"target {target} is pinned")
    results, order, parent, children = _vertex_assignments(
        g, comp, boundary, m, target, k_max)
    top = max(lz for lz, _, _ in results)
    num = 0.0
    den = 0.0
    for lz, pins, msgs in results:
        wz = math.exp(lz - top)
        r0, r1 = msgs[target]
        if target in pins:
            p1 = float(pins[target])
        else:
            p1 = r1 / (r0 + r1)
        num += wz * p1
        den += wz
    return num / den


class PreparedVertexComponent:
    """Assignment table plus rooted-tree data, reusable across draws with
    the same boundary state."""

    __slots__ = ("results", "order", "parent", "children", "ef", "weights")

    def __init__(self, results, order, parent, children, ef):
        self.results = results
        self.order = order
        self.parent = parent
        self.children = children
        self.ef = ef
        if len(results) > 1:
            top = max(lz for lz, _, _ in results)
            self.weights = [math.exp(lz - top) for lz, _, _ in results]
        else:
            self.weights = None


def prepare_vertex_component(g: Graph, comp: Component, boundary: Pinning | None,
                             m: ModelSpec,
                             k_max: int = DEFAULT_EXCESS_CAP) -> PreparedVertexComponent:
    root = comp.vertices[0]
    results, order, parent, children = _vertex_assignments(
        g, comp, boundary, m, root, k_max)
    return PreparedVertexComponent(results, order, parent, children, _edge_factor(m))


def sample_vertex_prepared(prep: PreparedVertexComponent, draw) -> dict:
    """Draw 0 picks the excess assignment (skipped when unique); draw 1+i
    samples the i-th vertex in rooted BFS order (skipped when pinned)."""
    if prep.weights is None:
        _, pins, msgs = prep.results[0]
    else:
        total = sum(prep.weights)
        u = draw(0) * total
        acc = 0.0
        chosen = len(prep.results) - 1
        for i, w in enumerate(prep.weights):
            acc += w
            if u < acc:
                chosen = i
                break
        _, pins, msgs = prep.results[chosen]
    ef = prep.ef
    parent = prep.parent
    values = {}
    for i, v in enumerate(prep.order):
        if v in pins:
            values[v] = pins[v]
            continue
        m0, m1 = msgs[v]
        p = parent[v]
        if p is not None:
            sp = values[p]
            m0, m1 = ef(sp, 0) * m0, ef(sp, 1) * m1
        values[v] = 1 if draw(1 + i) * (m0 + m1) < m1 else 0
    return values


def conditional_sample_dp(g: Graph, comp: Component, boundary: Pinning | None,
                          m: ModelSpec, seed=None, draw=None, comp_index: int = 0,
                          k_max: int = DEFAULT_EXCESS_CAP) -> dict:
    """Exact sample of the component sites given the boundary pins.

    The excess-edge endpoint assignment is chosen with probability
    proportional to its partition function, then the spanning tree is
    sampled top-down by conditional marginals.  Randomness comes from
    ``draw(j)`` if given, else from a PhiloxStream keyed by ``seed``.
    """
    if draw is None:
        if seed is None:
            raise InvalidParameterError("need a seed or a draw function")
        stream = PhiloxStream(seed)
        draw = lambda j: stream.uniform(comp_index, j, PHASE_FINAL)
    if m.kind == MATCHINGS:
        return matching_sample_dp(g, comp, boundary, m, draw, k_max)
    prep = prepare_vertex_component(g, comp, boundary, m, k_max)
    return sample_vertex_prepared(prep, draw)


# ---------------------------------------------------------------------------
# monomer-dimer components
# ---------------------------------------------------------------------------

def _blocked_from_boundary(g: Graph, comp: Component, boundary: Pinning | None):
    """Vertices of the component covered by a pinned matched outside edge."""
    blocked = set()
    in_comp = set(comp.vertices)
    comp_edges = set(comp.tree_edges) | set(comp.excess_edges)
    comp_edges = {(min(a, b), max(a, b)) for a, b in comp_edges}
    if boundary is None:
        return blocked
    for eidx, spin in boundary.items():
        if spin != 1:
            continue
        u, v = g.edges[eidx]
        if (u, v) in comp_edges:
            raise InvalidParameterError(
                f"boundary pin on edge {eidx} inside the component")
        for x in (u, v):
            if x in in_comp:
                blocked.add(x)
    return blocked


def _matching_tree_ratios(comp, blocked, gamma, order, parent, children):
    """r[v] = P(v unmatched in its subtree) and the log partition function
    of the spanning forest under the blocked set."""
    r = {}
    logz = 0.0
    for v in reversed(order):
        kids = children[v]
        s = 0.0
        for c in kids:
            if c not in blocked and v not in blocked:
                s += r[c]
        denom = 1.0 + gamma * s
        r[v] = 1.0 / denom
        logz += math.log(denom)
    return r, logz


def _matching_assignments(g: Graph, comp: Component, boundary: Pinning | None,
                          m: ModelSpec, k_max: int):
    if m.kind != MATCHINGS:
        raise InvalidParameterError("matching DP called with a vertex model")
    if comp.tree_excess > k_max:
        raise ComponentTooComplexError(
            f"component tree-excess {comp.tree_excess} exceeds cap {k_max}",
            component=comp)
    gamma = float(m.param)
    blocked0 = _blocked_from_boundary(g, comp, boundary)
    root = comp.vertices[0]
    order, parent = _root_order(comp, root)
    children = {v: [] for v in comp.vertices}
    for v in order:
        p = parent[v]
        if p is not None:
            children[p].append(v)
    excess = list(comp.excess_edges)
    results = []
    for a in range(1 << len(excess)):
        chosen = [e for i, e in enumerate(excess) if (a >> i) & 1]
        blocked = set(blocked0)
        ok = True
        for x, y in chosen:
            if x in blocked or y in blocked:
                ok = False
                break
            blocked.add(x)
            blocked.add(y)
        if not ok:
            continue
        r, logz = _matching_tree_ratios(comp, blocked, gamma, order, parent, children)
        logw = logz + len(chosen) * math.log(gamma)
        results.append((logw, a, blocked, r))
    if not results:
        raise EmptySupportError("boundary pins admit no valid matching")
    return results, excess, order, parent, children, gamma, blocked0


def matching_marginal_dp(g: Graph, comp: Component, boundary: Pinning | None,
                         m: ModelSpec, target: int,
                         k_max: int = DEFAULT_EXCESS_CAP) -> float:
    """P(edge ``target`` is in the matching) on the component."""
    tu, tv = g.edges[target]
    te = (min(tu, tv), max(tu, tv))
    comp_edges = {(min(a, b), max(a, b)) for a, b in
                  list(comp.tree_edges) + list(comp.excess_edges)}
    if te not in comp_edges:
        raise InvalidParameterError(f"edge {target} not in component")
    results, excess, order, parent, children, gamma, blocked0 = \
        _matching_assignments(g, comp, boundary, m, k_max)
    excess_keys = [(min(a, b), max(a, b)) for a, b in excess]
    target_bit = excess_keys.index(te) if te in excess_keys else None
    top = max(lw for lw, _, _, _ in results)
    num = 0.0
    den = 0.0
    for lw, a, blocked, r in results:
        w = math.exp(lw - top)
        den += w
        if target_bit is not None:
            if (a >> target_bit) & 1:
                num += w
        else:
            num += w * _tree_edge_match_prob(te, blocked, r, order, parent,
                                             children, gamma)
    return num / den


class PreparedMatchingComponent:
    """Assignment table for a monomer-dimer component, reusable across
    draws with the same boundary state."""

    __slots__ = ("results", "excess_idx", "tree_idx", "child_edge", "order",
                 "children", "gamma", "weights", "pos")

    def __init__(self, g, results, excess, tree_edges, order, children, gamma):
        self.results = results
        self.excess_idx = [g.edge_index(x, y) for x, y in excess]
        self.tree_idx = [g.edge_index(a, b) for a, b in tree_edges]
        self.child_edge = {c: g.edge_index(v, c)
                           for v in children for c in children[v]}
        self.order = order
        self.children = children
        self.gamma = gamma
        self.pos = {v: i for i, v in enumerate(order)}
        if len(results) > 1:
            top = max(lw for lw, _, _, _ in results)
            self.weights = [math.exp(lw - top) for lw, _, _, _ in results]
        else:
            self.weights = None


def prepare_matching_component(g: Graph, comp: Component, boundary: Pinning | None,
                               m: ModelSpec,
                               k_max: int = DEFAULT_EXCESS_CAP) -> PreparedMatchingComponent:
    results, excess, order, parent, children, gamma, _ = \
        _matching_assignments(g, comp, boundary, m, k_max)
    return PreparedMatchingComponent(g, results, excess, comp.tree_edges,
                                     order, children, gamma)


def sample_matching_prepared(prep, draw) -> dict:
    """Draw 0 picks the excess assignment (skipped when unique); draw 1+i is
    the categorical decision of the i-th spanning-tree vertex, skipped when
    the vertex is blocked or already matched."""
    if prep.weights is None:
        _, a, blocked, r = prep.results[0]
    else:
        total = sum(prep.weights)
        u = draw(0) * total
        acc = 0.0
        idx = len(prep.results) - 1
        for i, w in enumerate(prep.weights):
            acc += w
            if u < acc:
                idx = i
                break
        _, a, blocked, r = prep.results[idx]
    values = {}
    for i, eidx in enumerate(prep.excess_idx):
        values[eidx] = (a >> i) & 1
    for eidx in prep.tree_idx:
        values[eidx] = 0
    gamma = prep.gamma
    matched = set()
    for v in prep.order:
        if v in blocked or v in matched:
            continue
        avail = [c for c in prep.children[v] if c not in blocked and c not in matched]
        if not avail:
            continue
        u = draw(1 + prep.pos[v])
        acc = 0.0
        rv = r[v]
        for c in avail:
            acc += gamma * r[c] * rv
            if u < acc:
                values[prep.child_edge[c]] = 1
                matched.add(c)
                matched.add(v)
                break
    return values


def matching_sample_dp(g: Graph, comp: Component, boundary: Pinning | None,
                       m: ModelSpec, draw, k_max: int = DEFAULT_EXCESS_CAP) -> dict:
    """Exact matching sample on the component; returns {edge index: 0/1}."""
    prep = prepare_matching_component(g, comp, boundary, m, k_max)
    return sample_matching_prepared(prep, draw)


def _up_ratios(blocked, r, order, parent, children, gamma):
    """up[v] = P(parent(v) is unmatched in the tree minus subtree(v)).

    Forward pass mirror of the subtree ratios; up[root] is unused.
    """
    up = {}
    for v in order[1:]:
        p = parent[v]
        if p in blocked:
            up[v] = 1.0
            continue
        sib = sum(r[c] for c in children[p] if c != v and c not in blocked)
        gp = parent[p]
        par = up[p] if (gp is not None and gp not in blocked) else 0.0
        up[v] = 1.0 / (1.0 + gamma * (sib + par))
    return up


def _tree_edge_match_prob(te, blocked, r, order, parent, children, gamma):
    """P(tree edge in the matching): split the tree at the edge, multiply
    the two sides' unmatched ratios."""
    a, b = te
    child = b if parent.get(b) == a else a
    par = a if child == b else b
    if child in blocked or par in blocked:
        return 0.0
    up = _up_ratios(blocked, r, order, parent, children, gamma)
    x = gamma * r[child] * up[child]
    return x / (1.0 + x)
