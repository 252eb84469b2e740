"""MDD construction: tuple tables, conjunction, static reduction, generators.

All builders funnel through a bottom-up hash-consing constructor, so the
output is uniqueness reduced by construction and, in full mode, fully
reduced: a node forwarding its whole current domain to one child is
elided into a long edge (or turned into a wildcard node, depending on
the requested edge mode).  Fully reduced diagrams are canonical, which
`canonical_form` exploits for isomorphism checks.
"""

from __future__ import annotations

from .mdd import (
    Mdd, Node, WILD, KIND_LONG, label_key,
    enumerate_solutions,
)


class EmptyConstraint(Exception):
    """The constraint admits no solution; an MDD cannot represent it."""


class NodeLimitExceeded(Exception):
    def __init__(self, limit):
        super().__init__(f"node limit {limit} exceeded")
        self.limit = limit


class TupleTable:
    """Allowed rows of a tabular constraint over `scope` variables."""

    def __init__(self, scope, rows):
        self.scope = tuple(scope)
        self.rows = {tuple(r) for r in rows}
        for r in self.rows:
            if len(r) != len(self.scope):
                raise ValueError(f"row {r} does not match scope arity {len(self.scope)}")

    def check_domains(self, dom_sets):
        for r in self.rows:
            for k, v in enumerate(r):
                if v not in dom_sets[k + 1]:
                    raise ValueError(f"row value {v} outside domain of position {k + 1}")


class UndirectedGraph:
    """Simple undirected graph on vertices 1..n (no self-loops)."""

    def __init__(self, vertex_count: int, edges):
        self.vertex_count = vertex_count
        self.edges = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if not (1 <= a <= vertex_count and 1 <= b <= vertex_count):
                raise ValueError(f"vertex out of range: {(a, b)}")
            self.edges.add((min(a, b), max(a, b)))
        self.adj = {v: [] for v in range(1, vertex_count + 1)}
        for a, b in sorted(self.edges):
            self.adj[a].append(b)
            self.adj[b].append(a)

    @classmethod
    def cycle(cls, n: int) -> "UndirectedGraph":
        return cls(n, [(i, i % n + 1) for i in range(1, n + 1)])

    @classmethod
    def path(cls, n: int) -> "UndirectedGraph":
        return cls(n, [(i, i + 1) for i in range(1, n)])


def dom_sets_of(domains, n: int) -> list:
    """Normalize a domain argument to a 1-based list of frozensets.

    Accepts a DomainStore/DomainView (current domains), or a plain list
    of value collections in variable order.
    """
    if hasattr(domains, "values") and hasattr(domains, "contains"):
        return [None] + [frozenset(domains.values(i)) for i in range(1, n + 1)]
    out = [None] + [frozenset(d) for d in domains]
    if len(out) != n + 1:
        raise ValueError(f"expected {n} domains, got {len(out) - 1}")
    return out


class _Builder:
    """Bottom-up hash-consing target for reduced MDD construction."""

    def __init__(self, n, dom_sets, mode="full", edge_mode="long", max_nodes=None):
        if mode not in ("uniqueness", "full"):
            raise ValueError(f"bad reduce mode {mode!r}")
        if edge_mode not in ("plain", "long", "wildcard"):
            raise ValueError(f"bad edge mode {edge_mode!r}")
        self.n = n
        self.dom_sets = dom_sets
        self.mode = mode
        self.edge_mode = edge_mode
        self.max_nodes = max_nodes
        self.mdd = Mdd(n)
        self.terminal = self.mdd.new_node(n + 1)
        self.mdd.terminal = self.terminal
        self.cache: dict = {}

    def node(self, layer: int, items) -> Node | None:
        """Hash-cons a node from (label, child Node) pairs; None if dead.

        In full mode a node covering its whole layer-domain with a single
        child is elided (long) or emitted as a wildcard node.
        """
        items = [(lab, ch) for lab, ch in items if ch is not None]
        if not items:
            return None
        items.sort(key=lambda it: label_key(it[0]))
        if self.mode == "full":
            first_child = items[0][1]
            if all(ch is first_child for _, ch in items):
                labels = {lab for lab, _ in items}
                full = (WILD in labels) or labels == self.dom_sets[layer]
                if full:
                    if self.edge_mode != "wildcard":
                        return first_child
                    items = [(WILD, first_child)]
        key = (layer, tuple((lab, ch.id) for lab, ch in items))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        wildcard = len(items) == 1 and items[0][0] is WILD
        u = self.mdd.new_node(layer, wildcard)
        if self.max_nodes is not None and len(self.mdd.nodes) > self.max_nodes:
            raise NodeLimitExceeded(self.max_nodes)
        for lab, ch in items:
            self.mdd.new_edge(u, lab, ch)
        self.cache[key] = u
        return u

    def finish(self, root: Node | None) -> Mdd:
        if root is None:
            raise EmptyConstraint("constraint has no solutions")
        self.mdd.root = root
        return self.mdd


def build_from_tuples(table: TupleTable, domains, *, mode="full",
                      edge_mode="long", max_nodes=None) -> Mdd:
    """Reduced MDD whose solution set equals the table rows exactly.

    Builds the row trie layer by layer through the hash-consing builder
    (insertion order cannot matter).  Raises EmptyConstraint on an empty
    table: every non-terminal node needs an outgoing edge, so "false" has
    no diagram.
    """
    n = len(table.scope)
    dom_sets = dom_sets_of(domains, n)
    table.check_domains(dom_sets)
    if not table.rows:
        raise EmptyConstraint("empty tuple table")
    b = _Builder(n, dom_sets, mode, edge_mode, max_nodes)

    def rec(rows, layer):
        if layer > n:
            return b.terminal
        groups = {}
        for r in rows:
            groups.setdefault(r[layer - 1], []).append(r)
        return b.node(layer, ((v, rec(sub, layer + 1)) for v, sub in sorted(groups.items())))

    return b.finish(rec(sorted(table.rows), 1))


def _child_map(mdd: Mdd, u: Node, cache: dict) -> dict:
    m = cache.get(u.id)
    if m is None:
        m = {e.label: e.dst for e in mdd.out_edges(u)}
        cache[u.id] = m
    return m


def reduce_static(mdd: Mdd, domains, *, mode="full", edge_mode="long",
                  max_nodes=None) -> Mdd:
    """Rebuild the live part of `mdd`, reduced bottom-up.

    uniqueness: merge same-layer nodes with identical outgoing sets.
    full: additionally elide nodes whose live labels cover the whole
    current domain of their layer toward a single child.  Existing long
    and wildcard edges pass through (a wildcard node counts as full
    coverage, so full mode also converts between edge styles).
    """
    n = mdd.n_vars
    b = _Builder(n, dom_sets_of(domains, n), mode, edge_mode, max_nodes)
    memo = {}

    def rec(u: Node):
        if u is mdd.terminal:
            return b.terminal
        r = memo.get(u.id)
        if r is None:
            r = b.node(u.layer, ((e.label, rec(e.dst)) for e in mdd.sorted_out(u)))
            memo[u.id] = r
        return r

    return b.finish(rec(mdd.root))


def expand_to_plain(mdd: Mdd, domains, *, max_nodes=None) -> Mdd:
    """Rewrite long edges and wildcard nodes into one-layer steps.

    Each skipped layer becomes a node carrying every current domain value
    of that variable; the result is uniqueness reduced (shared tails
    merge) and contains no long or wildcard edges.
    """
    n = mdd.n_vars
    dom_sets = dom_sets_of(domains, n)
    b = _Builder(n, dom_sets, "uniqueness", "plain", max_nodes)
    memo = {}

    def chain(layer, stop_layer, tail):
        if layer == stop_layer:
            return tail
        nxt = chain(layer + 1, stop_layer, tail)
        return b.node(layer, ((v, nxt) for v in sorted(dom_sets[layer])))

    def rec(u: Node):
        if u is mdd.terminal:
            return b.terminal
        r = memo.get(u.id)
        if r is None:
            items = []
            for e in mdd.sorted_out(u):
                tail = chain(u.layer + 1, e.dst.layer, rec(e.dst))
                if e.label is WILD:
                    items.extend((v, tail) for v in sorted(dom_sets[u.layer]))
                else:
                    items.append((e.label, tail))
            r = b.node(u.layer, items)
            memo[u.id] = r
        return r

    root = rec(mdd.root)
    if root is not None and mdd.root.layer > 1:
        root = chain(1, mdd.root.layer, root)
    return b.finish(root)


def conjoin(a: Mdd, b_mdd: Mdd, domains, *, mode="full", edge_mode="long",
            max_nodes=None) -> Mdd:
    """Fully reduced MDD accepting exactly the common solutions of a and b.

    Memoized pairwise product descent.  Long edges desynchronize the two
    diagrams, so a pair state is decided at layer min(l(u), l(w)): the
    deeper side behaves as an implicit wildcard until the other catches
    up.  Raises EmptyConstraint when the intersection is empty.
    """
    if a.n_vars != b_mdd.n_vars:
        raise ValueError("conjoin requires the same variable count")
    n = a.n_vars
    dom_sets = dom_sets_of(domains, n)
    out = _Builder(n, dom_sets, mode, edge_mode, max_nodes)
    memo = {}
    cma: dict = {}
    cmb: dict = {}

    def step(mdd, cmcache, u, i, v):
        # Child of u for value v at layer i; u itself if it sits deeper.
        if u.layer > i:
            return u
        m = _child_map(mdd, u, cmcache)
        w = m.get(WILD)
        if w is not None:
            return w
        return m.get(v)

    def meld(u, w):
        key = (u.id, w.id)
        r = memo.get(key, _MISSING)
        if r is not _MISSING:
            return r
        i = min(u.layer, w.layer)
        if i == n + 1:
            memo[key] = out.terminal
            return out.terminal
        items = []
        for v in sorted(dom_sets[i]):
            cu = step(a, cma, u, i, v)
            cw = step(b_mdd, cmb, w, i, v)
            if cu is None or cw is None:
                continue
            items.append((v, meld(cu, cw)))
        r = out.node(i, items)
        memo[key] = r
        return r

    return out.finish(meld(a.root, b_mdd.root))


_MISSING = object()


def n_walk_mdd(g: UndirectedGraph) -> Mdd:
    """Uniqueness-reduced MDD of all n-vertex walks of g.

    Variables x1..xn over domain {1..n}; variable i holds the i-th vertex
    visited, consecutive vertices must be adjacent.  State space is
    (position, previous vertex), so the diagram has at most n^2 + 2
    nodes.
    """
    n = g.vertex_count
    dom_sets = [None] + [frozenset(range(1, n + 1))] * n
    b = _Builder(n, dom_sets, "uniqueness", "plain")
    memo = {}

    def rec(i, vprev):
        if i > n:
            return b.terminal
        key = (i, vprev)
        r = memo.get(key, _MISSING)
        if r is _MISSING:
            r = b.node(i, ((w, rec(i + 1, w)) for w in g.adj[vprev]))
            memo[key] = r
        return r

    if n == 1:
        return b.finish(b.node(1, [(1, b.terminal)]))
    root = b.node(1, ((v, rec(2, v)) for v in range(1, n + 1)))
    if root is None:
        raise EmptyConstraint("graph admits no n-step walk")
    return b.finish(root)


def at_least_once_mdd(n: int, d: int, v: int, allow_long_edges: bool = True) -> Mdd:
    """MDD accepting exactly the vectors over {1..d}^n that contain v.

    With long edges the first occurrence of v jumps straight to the
    terminal; without them the seen/not-seen DFA is unfolded layer by
    layer.
    """
    if n < 1 or d < 1 or not 1 <= v <= d:
        raise ValueError("need n>=1 and v in 1..d")
    dom_sets = [None] + [frozenset(range(1, d + 1))] * n
    b = _Builder(n, dom_sets, "uniqueness", "long" if allow_long_edges else "plain")
    memo_zero = {}
    memo_one = {}

    def ones(i):
        if i > n:
            return b.terminal
        r = memo_one.get(i)
        if r is None:
            r = b.node(i, ((w, ones(i + 1)) for w in range(1, d + 1)))
            memo_one[i] = r
        return r

    def zeros(i):
        r = memo_zero.get(i)
        if r is None:
            items = [(v, b.terminal if allow_long_edges else ones(i + 1))]
            if i < n:
                items.extend((w, zeros(i + 1)) for w in range(1, d + 1) if w != v)
            r = b.node(i, items)
            memo_zero[i] = r
        return r

    return b.finish(zeros(1))


def chain_leq_mdd(j: int, k: int, *, mode="full") -> Mdd:
    """MDD of x1<=x2, x1<=x3, ..., x1<=xj over domains {1..k}.

    mode="full" collapses the x1=1 branch (and any other full-coverage
    chain) into long edges; mode="uniqueness" keeps every chain node
    explicit, which is the interesting fixture for dynamic reduction.
    """
    if j < 2 or k < 2:
        raise ValueError("need j>=2 and k>=2")
    dom_sets = [None] + [frozenset(range(1, k + 1))] * j
    b = _Builder(j, dom_sets, mode, "long")
    memo = {}

    def rec(i, vmin):
        if i > j:
            return b.terminal
        key = (i, vmin)
        r = memo.get(key)
        if r is None:
            r = b.node(i, ((w, rec(i + 1, vmin)) for w in range(vmin, k + 1)))
            memo[key] = r
        return r

    return b.finish(b.node(1, ((v, rec(2, v)) for v in range(1, k + 1))))


def build_alldifferent_mdd(n: int, domains, *, max_nodes=None) -> Mdd:
    """MDD of an AllDifferent over n variables (exponential; small n only)."""
    dom_sets = dom_sets_of(domains, n)
    b = _Builder(n, dom_sets, "full", "long", max_nodes)
    memo = {}

    def rec(i, used):
        if i > n:
            return b.terminal
        key = (i, used)
        r = memo.get(key, _MISSING)
        if r is _MISSING:
            r = b.node(i, ((v, rec(i + 1, used | {v}))
                           for v in sorted(dom_sets[i]) if v not in used))
            memo[key] = r
        return r

    root = rec(1, frozenset())
    if root is None:
        raise EmptyConstraint("alldifferent has no solutions over these domains")
    return b.finish(root)


def embed_scope(mdd: Mdd, scope, n_total: int, domains, *, max_nodes=None) -> Mdd:
    """Lift an MDD over `scope` onto the full variable set 1..n_total.

    Scope position p becomes problem layer scope[p-1]; the gaps turn into
    long edges (free variables), so the result is fully reduced over the
    total variable set.
    """
    scope = tuple(scope)
    k = mdd.n_vars
    if len(scope) != k:
        raise ValueError("scope arity mismatch")
    if sorted(scope) != sorted(set(scope)) or any(not 1 <= s <= n_total for s in scope):
        raise ValueError("scope must be distinct variables within range")
    if list(scope) != sorted(scope):
        raise ValueError("scope must be ascending (variable order is fixed)")
    dom_sets = dom_sets_of(domains, n_total)
    b = _Builder(n_total, dom_sets, "full", "long", max_nodes)
    memo = {}

    def maplayer(layer):
        return n_total + 1 if layer == k + 1 else scope[layer - 1]

    def rec(u: Node):
        if u is mdd.terminal:
            return b.terminal
        r = memo.get(u.id)
        if r is None:
            r = b.node(maplayer(u.layer),
                       ((e.label, rec(e.dst)) for e in mdd.sorted_out(u)))
            memo[u.id] = r
        return r

    return b.finish(rec(mdd.root))


def canonical_form(mdd: Mdd):
    """Canonical nested-tuple form of the live diagram.

    Two MDDs are isomorphic (layer- and label-respecting bijection) iff
    their canonical forms are equal.  Interned bottom-up so shared
    subgraphs compare by identity.
    """
    memo = {}
    intern = {}

    def rec(u: Node):
        r = memo.get(u.id)
        if r is None:
            if u.layer == mdd.n_vars + 1:
                r = ("t",)
            else:
                r = (u.layer, tuple((("*" if e.label is WILD else e.label), rec(e.dst))
                                    for e in mdd.sorted_out(u)))
            r = intern.setdefault(r, r)
            memo[u.id] = r
        return r

    if mdd.root is None or not mdd.root.alive:
        return ("dead",)
    return rec(mdd.root)


def shape_id(mdd: Mdd) -> str:
    """Stable identifier of the diagram shape (scope-independent)."""
    import hashlib
    return hashlib.sha1(repr(canonical_form(mdd)).encode()).hexdigest()


def solutions_set(mdd: Mdd, domains) -> set:
    """Solution set under explicit domain sets (test convenience)."""
    n = mdd.n_vars
    dom_sets = dom_sets_of(domains, n)

    class _D:
        @staticmethod
        def values(i):
            return dom_sets[i]

        @staticmethod
        def contains(i, v):
            return v in dom_sets[i]

    return set(enumerate_solutions(mdd, _D))
