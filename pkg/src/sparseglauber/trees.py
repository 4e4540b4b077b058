"""Tree computations: self-avoiding-walk trees, ratio recursions, influence
values, decay bounds and branching values.

Rooted trees are stored in discovery order (``parents[i] < i``, node 0 is
the root) so every bottom-up pass is a single reversed sweep and every
top-down pass a forward sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    EmptySupportError,
    EnumerationOverflowError,
    InvalidParameterError,
)
from .graphs import Graph, bfs_levels
from .models import HARDCORE, ISING, MATCHINGS, ModelSpec, Pinning

SAW_NODE_CAP = 10_000_000


@dataclass(frozen=True)
class RootedTree:
    """Rooted tree with original-vertex labels and optional pinned nodes.

    ``parents[0] == -1`` and parents precede children.  ``pins`` fixes the
    spin of terminal nodes (the cycle-closing leaves of a SAW tree).
    """

    parents: tuple
    labels: tuple
    pins: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parents and self.parents[0] != -1:
            raise InvalidParameterError("node 0 must be the root")
        for i, p in enumerate(self.parents):
            if i > 0 and not 0 <= p < i:
                raise InvalidParameterError("parents must precede children")

    @property
    def size(self) -> int:
        return len(self.parents)

    @cached_property
    def children(self):
        kids = [[] for _ in range(self.size)]
        for i, p in enumerate(self.parents):
            if p >= 0:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def depths(self):
        d = [0] * self.size
        for i, p in enumerate(self.parents):
            if p >= 0:
                d[i] = d[p] + 1
        return tuple(d)

    @property
    def depth(self) -> int:
        return max(self.depths, default=0)

    @property
    def terminal_count(self) -> int:
        return len(self.pins)

    def edge_list(self):
        return [(p, i) for i, p in enumerate(self.parents) if p >= 0]

    def as_graph(self) -> Graph:
        return Graph(self.size, self.edge_list())


def tree_from_graph(g: Graph, root: int) -> RootedTree:
    """View a tree-shaped graph as a RootedTree (labels are the vertices)."""
    if len(g.edges) != g.n - 1:
        raise InvalidParameterError("graph is not a tree")
    parents = [-1]
    labels = [root]
    index = {root: 0}
    queue = [root]
    while queue:
        x = queue.pop(0)
        for y in g.adj[x]:
            if y not in index:
                index[y] = len(labels)
                parents.append(index[x])
                labels.append(y)
                queue.append(y)
    if len(labels) != g.n:
        raise InvalidParameterError("graph is not connected")
    return RootedTree(tuple(parents), tuple(labels))


def reroot(t: RootedTree, new_root: int) -> RootedTree:
    """Same tree, rooted at node ``new_root``; labels and pins carried over."""
    if new_root == 0:
        return t
    adj = [[] for _ in range(t.size)]
    for i, p in enumerate(t.parents):
        if p >= 0:
            adj[p].append(i)
            adj[i].append(p)
    parents = [-1]
    old_of = [new_root]
    index = {new_root: 0}
    queue = [new_root]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if y not in index:
                index[y] = len(old_of)
                parents.append(index[x])
                old_of.append(y)
                queue.append(y)
    labels = tuple(t.labels[o] for o in old_of)
    pins = {index[o]: s for o, s in t.pins.items()}
    return RootedTree(tuple(parents), labels, pins)


def saw_tree(g: Graph, root: int, depth_cap: int) -> RootedTree:
    """Tree of self-avoiding walks from ``root``, truncated at depth_cap.

    A walk that revisits a vertex u (other than by backtracking) ends in a
    terminal node pinned by the cycle-closing rule: incident edges of u are
    ordered by neighbor index, and the terminal is pinned occupied when the
    closing edge exceeds the edge by which the walk first left u, otherwise
    unoccupied.
    """
    if not 0 <= root < g.n:
        raise InvalidParameterError(f"root {root} out of range")
    if depth_cap < 0:
        raise InvalidParameterError("depth_cap must be nonnegative")
    parents = [-1]
    labels = [root]
    pins = {}
    # stack entries: (vertex, node_id, depth, path dict vertex -> successor)
    stack = [(root, 0, 0, {root: None})]
    while stack:
        x, node, depth, succ = stack.pop()
        if depth >= depth_cap:
            continue
        parent_vertex = None
        for v, nxt in succ.items():
            if nxt == x:
                parent_vertex = v
        # reversed so the left-most child is explored first (order only
        # affects node numbering, not the tree shape)
        for y in reversed(g.adj[x]):
            if y == parent_vertex:
                continue
            child = len(parents)
            if child >= SAW_NODE_CAP:
                raise EnumerationOverflowError(
                    f"self-avoiding-walk tree exceeds {SAW_NODE_CAP} nodes")
            if y in succ:
                # closing the cycle at y: compare the closing edge {x,y}
                # with the first departure edge {y, succ[y]} at y
                parents.append(node)
                labels.append(y)
                pins[child] = 1 if x > succ[y] else 0
                continue
            parents.append(node)
            labels.append(y)
            new_succ = dict(succ)
            new_succ[x] = y
            new_succ[y] = None
            stack.append((y, child, depth + 1, new_succ))
    return RootedTree(tuple(parents), tuple(labels), pins)


@dataclass(frozen=True)
class RatioProfile:
    """Per-node occupation ratios / unmatched probabilities R_v plus the
    rooted branching weights alpha_v (alpha_root equals the branching value
    of the root inside the tree, for the same d)."""

    R: tuple
    alpha: tuple

    @property
    def root_ratio(self):
        return self.R[0]

    @property
    def root_marginal(self) -> float:
        r = self.R[0]
        if math.isinf(r):
            return 1.0
        return r / (1.0 + r)


def hardcore_ratio(t: RootedTree, lam: float, pinning: dict | None = None,
                   d: float = 1.0) -> RatioProfile:
    """Occupied/unoccupied ratio of every subtree root under the hard-core
    recursion R_v = lam * prod 1/(1+R_child), with leaves at R = lam.

    Pins (tree pins plus the optional extra ``pinning``, node -> spin)
    enter as R = 0 for spin 0 and R = +inf for spin 1; two adjacent
    occupied pins are contradictory and raise EmptySupportError.
    """
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    pins = dict(t.pins)
    if pinning:
        pins.update(pinning)
    n = t.size
    R = [0.0] * n
    alpha = [1.0] * n
    children = t.children
    for v in range(n - 1, -1, -1):
        kids = children[v]
        pin = pins.get(v)
        if kids:
            alpha[v] = 1.0 + sum(alpha[c] for c in kids) / d
        if pin == 0:
            R[v] = 0.0
            continue
        if pin == 1:
            if any(math.isinf(R[c]) for c in kids):
                raise EmptySupportError("two adjacent occupied pins")
            R[v] = math.inf
            continue
        if not kids:
            R[v] = float(lam)
            continue
        prod = 1.0
        for c in kids:
            rc = R[c]
            prod *= 1.0 if math.isinf(rc) else 1.0 / (1.0 + rc)
            if math.isinf(rc):
                prod = 0.0
        R[v] = lam * prod
    # an occupied pin adjacent to its parent's occupied pin from above
    for v in range(1, n):
        if pins.get(v) == 1 and pins.get(t.parents[v]) == 1:
            raise EmptySupportError("two adjacent occupied pins")
    return RatioProfile(tuple(R), tuple(alpha))


def matchings_unmatched(t: RootedTree, gamma: float, d: float = 1.0) -> RatioProfile:
    """Probability that each node is unmatched within its own subtree:
    R_u = 1/(1 + gamma * sum R_child), leaves at R = 1."""
    if gamma <= 0:
        raise InvalidParameterError("gamma must be positive")
    n = t.size
    R = [1.0] * n
    alpha = [1.0] * n
    children = t.children
    for v in range(n - 1, -1, -1):
        kids = children[v]
        if not kids:
            continue
        alpha[v] = 1.0 + sum(alpha[c] for c in kids) / d
        R[v] = 1.0 / (1.0 + gamma * sum(R[c] for c in kids))
    return RatioProfile(tuple(R), tuple(alpha))


def saw_root_marginal(g: Graph, root: int, lam: float) -> float:
    """Hard-core occupation marginal of ``root`` computed on the pinned
    self-avoiding-walk tree (walks never exceed n vertices)."""
    t = saw_tree(g, root, depth_cap=g.n)
    return hardcore_ratio(t, lam).root_marginal


def tree_influence(t: RootedTree, m: ModelSpec, root=0):
    """Influence of the root site on every site of the tree.

    Vertex models return a list indexed by node; the root entry is 1 and
    pinned nodes get 0.  Hard-core uses the parent-to-child step
    -R_v/(1+R_v) extended multiplicatively along paths; Ising influences
    come from exact two-pin conditional marginals.  For matchings ``root``
    is a tree edge (node pair) and the result is a dict keyed by edges.
    """
    if m.kind == MATCHINGS:
        return _matching_edge_influence(t, m.param, root)
    tt = reroot(t, root) if root != 0 else t
    if m.kind == HARDCORE:
        prof = hardcore_ratio(tt, m.param)
        out = [0.0] * tt.size
        out[0] = 1.0
        for v in range(1, tt.size):
            if v in tt.pins:
                continue  # pinned spins do not move; zero influence
            rv = prof.R[v]
            out[v] = out[tt.parents[v]] * (-rv / (1.0 + rv))
        result = out
    elif m.kind == ISING:
        result = ising_tree_influence(tt, m.param)
    else:  # pragma: no cover
        raise InvalidParameterError(f"unsupported model {m.kind}")
    if root == 0:
        return result
    # map back to the original node numbering
    back = _node_map(t, tt, root)
    mapped = [0.0] * t.size
    for new, old in back.items():
        mapped[old] = result[new]
    return mapped


def _node_map(orig: RootedTree, rerooted: RootedTree, new_root: int):
    """new-node -> old-node map for reroot(orig, new_root)."""
    adj = [[] for _ in range(orig.size)]
    for i, p in enumerate(orig.parents):
        if p >= 0:
            adj[p].append(i)
            adj[i].append(p)
    index = {new_root: 0}
    order = [new_root]
    queue = [new_root]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if y not in index:
                index[y] = len(order)
                order.append(y)
                queue.append(y)
    return {new: old for new, old in enumerate(order)}


def ising_tree_influence(t: RootedTree, beta: float):
    """I(root -> v) on a tree by exact two-pin conditional marginals."""
    from .oracle import exact_marginal

    g = t.as_graph()
    m = ModelSpec(ISING, beta)
    out = [0.0] * t.size
    out[0] = 1.0
    base = dict(t.pins)
    for v in range(1, t.size):
        if v in t.pins:
            continue
        hi = exact_marginal(g, m, Pinning({**base, 0: 1}), v)
        lo = exact_marginal(g, m, Pinning({**base, 0: 0}), v)
        out[v] = float(hi - lo)
    return out


def _matching_edge_influence(t: RootedTree, gamma: float, base_edge):
    """Signed influence of ``base_edge`` on every tree edge.

    Step rule along an edge path: I(f -> f_child) = -gamma * R_child *
    R_far(f), where R is the subtree unmatched probability on the side away
    from the base edge.
    """
    a, b = base_edge
    if t.parents[b] == a:
        pass
    elif t.parents[a] == b:
        a, b = b, a
    else:
        raise InvalidParameterError(f"{base_edge} is not a tree edge")
    # orient the tree from each endpoint of the base edge outward; edge keys
    # in the result are unordered (min, max) node pairs
    adj = [[] for _ in range(t.size)]
    for i, p in enumerate(t.parents):
        if p >= 0:
            adj[p].append(i)
            adj[i].append(p)
    out = {(min(a, b), max(a, b)): 1.0}
    for side_root, other in ((a, b), (b, a)):
        order, parent = _orient(adj, side_root, other)
        R = {v: 1.0 for v in order}
        for v in reversed(order):
            kids = [u for u in adj[v] if u != other and parent.get(u) == v]
            if kids:
                R[v] = 1.0 / (1.0 + gamma * sum(R[u] for u in kids))
        # walk outward accumulating the step products
        stack = [(side_root, 1.0)]
        while stack:
            v, inf_v = stack.pop()
            for u in adj[v]:
                if u == other or parent.get(u) != v:
                    continue
                inf_u = inf_v * (-gamma * R[u] * R[v])
                out[(min(v, u), max(v, u))] = inf_u
                stack.append((u, inf_u))
    return out


def _orient(adj, root, forbidden):
    """BFS orientation of a tree from ``root`` avoiding ``forbidden``."""
    parent = {root: None}
    order = [root]
    queue = [root]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if y != forbidden and y not in parent:
                parent[y] = x
                order.append(y)
                queue.append(y)
    return order, parent


def ising_decay_bound(t: RootedTree, v: int, W, beta: float) -> float:
    """Sum over w in W of ((1-beta)/(1+beta))^dist(v,w): a certified upper
    bound on how far two boundary conditions differing on W can move the
    marginal at v."""
    if not 0 < beta < 1:
        raise InvalidParameterError("beta must lie in (0,1)")
    W = set(W)
    if not W:
        return 0.0
    adj = [[] for _ in range(t.size)]
    for i, p in enumerate(t.parents):
        if p >= 0:
            adj[p].append(i)
            adj[i].append(p)
    dist = {v: 0}
    queue = [v]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    ratio = (1.0 - beta) / (1.0 + beta)
    return sum(ratio ** dist[w] for w in W)


@dataclass(frozen=True)
class BranchingProfile:
    """Simple-path counts from a vertex and the derived branching value.

    ``path_counts[l]`` is the number of simple paths with l+1 vertices
    starting at the vertex; ``value`` is sum path_counts[l]/d^l up to the
    truncation length; ``tail_bound`` bounds the truncated remainder
    (infinite when the maximum degree is >= d)."""

    d: float
    path_counts: tuple
    level_counts: tuple
    value: float
    tail_bound: float


def branching_value(g: Graph, v: int, d: float, len_cap: int | None = None,
                    count_cap: int = 10_000_000) -> BranchingProfile:
    """Exact d-branching value of v truncated at len_cap, by DFS path
    enumeration; aborts once a level holds more than count_cap paths."""
    if d <= 0:
        raise InvalidParameterError("d must be positive")
    if count_cap < 1:
        raise InvalidParameterError("count_cap must be >= 1")
    if len_cap is None:
        len_cap = default_length_cap(g.n, d)
    if len_cap < 0:
        raise InvalidParameterError("len_cap must be nonnegative")
    counts = [0] * (len_cap + 1)
    counts[0] = 1
    visited = [False] * g.n
    visited[v] = True

    def dfs(x, depth):
        if depth == len_cap:
            return
        for y in g.adj[x]:
            if not visited[y]:
                counts[depth + 1] += 1
                if counts[depth + 1] > count_cap:
                    raise EnumerationOverflowError(
                        f"more than {count_cap} simple paths at length {depth + 1}")
                visited[y] = True
                dfs(y, depth + 1)
                visited[y] = False

    dfs(v, 0)
    value = sum(c / d ** l for l, c in enumerate(counts))
    delta = g.max_degree()
    if delta < d and counts[len_cap]:
        tail = (counts[len_cap] / d ** len_cap) * (delta / d) / (1.0 - delta / d)
    elif counts[len_cap] == 0:
        tail = 0.0
    else:
        tail = math.inf
    levels = bfs_levels(g, v, len_cap)
    return BranchingProfile(d=d, path_counts=tuple(counts),
                            level_counts=tuple(levels), value=value,
                            tail_bound=tail)


def default_length_cap(n: int, d: float) -> int:
    """ceil(4 log n / log d) for d > 1 (geometric decay makes the tail
    negligible on graphs passing the goodness check); n-1 otherwise."""
    if d > 1 and n > 1:
        return max(1, math.ceil(4.0 * math.log(n) / math.log(d)))
    return max(1, n - 1)


def default_radius(n: int) -> int:
    """floor((log log n)^2) - 1, clamped to >= 0."""
    if n < 3:
        return 0
    return max(0, math.floor(math.log(math.log(n)) ** 2) - 1)


def epsilon_good_check(g: Graph, v: int, d: float, eps: float,
                       R: int | None = None):
    """Level-count series S_hat = sum_r levels[r]/((1+eps)d)^r up to radius
    R (default floor((loglog n)^2)-1); good iff S_hat <= eps log n.

    Returns (S_hat, good, threshold).
    """
    if d <= 0 or eps <= 0:
        raise InvalidParameterError("need d > 0 and eps > 0")
    if R is None:
        R = default_radius(g.n)
    levels = bfs_levels(g, v, R)
    base = (1.0 + eps) * d
    s_hat = sum(c / base ** r for r, c in enumerate(levels))
    threshold = eps * math.log(g.n) if g.n > 0 else 0.0
    return s_hat, s_hat <= threshold, threshold
