"""Case-DAG variant: edges carry disjoint closed integer intervals.

Per layer, the distinct intervals are registered once: each holds a
count of still-valid values and the set of live edges labelled with it.
Removing a value stabs a static interval tree, decrements the covering
counters, and an interval whose count (or edge set) hits zero dies,
cascading through the usual no-value / no-reference node deaths.
Per-value coverage counters maintain the union, so a dying interval
reports exactly the values that lost their last cover.  Intervals are
never split when removals cut them: the over-supported values are
precisely the explicitly removed ones, which left the domains first.
"""

from __future__ import annotations

from .mdd import (
    Mdd, StepMetrics,
    link_out, link_in, unlink_out, unlink_in, relink_out, relink_in,
)
from .state import DomainStore


class _Fail(Exception):
    pass


class INode:
    __slots__ = ("id", "layer", "alive", "out_head", "in_head", "out_deg", "in_deg")

    def __init__(self, nid, layer):
        self.id = nid
        self.layer = layer
        self.alive = True
        self.out_head = None
        self.in_head = None
        self.out_deg = 0
        self.in_deg = 0


class IEdge:
    __slots__ = ("id", "src", "dst", "lo", "hi", "alive",
                 "out_prev", "out_next", "in_prev", "in_next", "info")

    def __init__(self, eid, src, dst, lo, hi):
        self.id = eid
        self.src = src
        self.dst = dst
        self.lo = lo
        self.hi = hi
        self.alive = True
        self.out_prev = None
        self.out_next = None
        self.in_prev = None
        self.in_next = None
        self.info = None


class IntervalInfo:
    """One distinct (layer, lo, hi) interval: remaining valid values and
    the live edges carrying it."""

    __slots__ = ("layer", "lo", "hi", "valid_count", "edges", "alive")

    def __init__(self, layer, lo, hi):
        self.layer = layer
        self.lo = lo
        self.hi = hi
        self.valid_count = 0
        self.edges = {}
        self.alive = True

    def __repr__(self):
        return f"I[{self.lo},{self.hi}]@{self.layer}(c={self.valid_count})"


class _TreeNode:
    __slots__ = ("center", "left", "right", "by_lo", "by_hi")


def _build_tree(infos):
    if not infos:
        return None
    points = sorted({iv.lo for iv in infos} | {iv.hi for iv in infos})
    center = points[len(points) // 2]
    node = _TreeNode()
    node.center = center
    here = [iv for iv in infos if iv.lo <= center <= iv.hi]
    node.by_lo = sorted(here, key=lambda iv: iv.lo)
    node.by_hi = sorted(here, key=lambda iv: -iv.hi)
    node.left = _build_tree([iv for iv in infos if iv.hi < center])
    node.right = _build_tree([iv for iv in infos if iv.lo > center])
    return node


def _stab(node, v, out):
    while node is not None:
        if v < node.center:
            for iv in node.by_lo:
                if iv.lo <= v:
                    out.append(iv)
                else:
                    break
            node = node.left
        elif v > node.center:
            for iv in node.by_hi:
                if iv.hi >= v:
                    out.append(iv)
                else:
                    break
            node = node.right
        else:
            out.extend(node.by_lo)
            return


class IntervalDag:
    """Layered DAG with disjoint sibling intervals per node."""

    def __init__(self, n_vars):
        self.n_vars = n_vars
        self.nodes = []
        self.edges = []
        self.root = None
        self.terminal = None
        self.live_edge_count = 0

    def new_node(self, layer) -> INode:
        u = INode(len(self.nodes), layer)
        self.nodes.append(u)
        return u

    def new_edge(self, src, lo, hi, dst) -> IEdge:
        if lo > hi:
            raise ValueError(f"empty interval [{lo},{hi}]")
        if src.layer + 1 != dst.layer:
            raise ValueError("interval DAGs have no long edges")
        e = IEdge(len(self.edges), src, dst, lo, hi)
        self.edges.append(e)
        link_out(e)
        link_in(e)
        self.live_edge_count += 1
        return e

    def out_edges(self, u):
        e = u.out_head
        while e is not None:
            yield e
            e = e.out_next

    def check_disjoint(self):
        for u in self.nodes:
            if not u.alive:
                continue
            spans = sorted((e.lo, e.hi) for e in self.out_edges(u))
            for (a, b), (c, _) in zip(spans, spans[1:]):
                if c <= b:
                    raise ValueError(f"overlapping sibling intervals at node {u.id}: "
                                     f"[{a},{b}] and [{c},..]")

    def sum_distinct_lengths(self) -> int:
        distinct = {(e.src.layer, e.lo, e.hi) for e in self.edges}
        return sum(hi - lo + 1 for _, lo, hi in distinct)


def build_interval_dag(rows, n_vars: int) -> IntervalDag:
    """Trie of per-variable interval rows, refined so sibling intervals
    are disjoint (overlapping row intervals split at their boundaries)."""
    rows = [tuple((int(lo), int(hi)) for lo, hi in r) for r in rows]
    for r in rows:
        if len(r) != n_vars:
            raise ValueError(f"row arity {len(r)} != {n_vars}")
        for lo, hi in r:
            if lo > hi:
                raise ValueError(f"empty interval {lo}:{hi}")
    if not rows:
        from .build import EmptyConstraint
        raise EmptyConstraint("empty interval table")
    dag = IntervalDag(n_vars)
    dag.terminal = dag.new_node(n_vars + 1)
    memo = {}

    def rec(layer, row_ids):
        if layer > n_vars:
            return dag.terminal
        key = (layer, row_ids)
        hit = memo.get(key)
        if hit is not None:
            return hit
        points = set()
        for rid in row_ids:
            lo, hi = rows[rid][layer - 1]
            points.add(lo)
            points.add(hi + 1)
        bounds = sorted(points)
        u = dag.new_node(layer)
        for a, b in zip(bounds, bounds[1:]):
            seg = (a, b - 1)
            sub = frozenset(rid for rid in row_ids
                            if rows[rid][layer - 1][0] <= a and b - 1 <= rows[rid][layer - 1][1])
            if sub:
                dag.new_edge(u, seg[0], seg[1], rec(layer + 1, sub))
        memo[key] = u
        return u

    dag.root = rec(1, frozenset(range(len(rows))))
    dag.check_disjoint()
    return dag


def expand_to_mdd(dag: IntervalDag, domains) -> Mdd:
    """Bridge for differential testing: one plain edge per (interval,
    value) pair over the given domains; identical solution set."""
    from .build import dom_sets_of
    dom_sets = dom_sets_of(domains, dag.n_vars)
    mdd = Mdd(dag.n_vars)
    remap = {}
    for u in dag.nodes:
        if u.alive:
            remap[u.id] = mdd.new_node(u.layer)
    for e in dag.edges:
        if e.alive:
            for v in range(e.lo, e.hi + 1):
                if v in dom_sets[e.src.layer]:
                    mdd.new_edge(remap[e.src.id], v, remap[e.dst.id])
    mdd.root = remap[dag.root.id]
    mdd.terminal = remap[dag.terminal.id]
    return mdd


class IntervalPropagator:
    """Incremental GAC over an IntervalDag, sharing the store and trail.

    Counter discipline: each (variable, value) removal is accounted
    against the covering distinct intervals exactly once per descent,
    whether the removal originated here or in another constraint.
    """

    def __init__(self, dag: IntervalDag, domains, *, metrics=None):
        if isinstance(domains, DomainStore):
            view = domains.identity_view()
        else:
            view = domains
        if view.n != dag.n_vars:
            raise ValueError("domain scope does not match the DAG")
        self.dag = dag
        self.view = view
        self.trail = view.store.trail
        self.metrics = metrics if metrics is not None else StepMetrics()
        self.trail.attach_metrics(self.metrics)
        self.infos: list[dict] = [dict() for _ in range(dag.n_vars + 2)]
        self.trees = [None] * (dag.n_vars + 2)
        self.cover: list[dict] = [dict() for _ in range(dag.n_vars + 2)]
        self._processed: set = set()
        self.failed = False
        self.initialized = False

    def is_entailed(self) -> bool:
        return False

    def initialize(self):
        """Register distinct intervals, count valid values over the
        current domains, prune structurally, and sync the domains."""
        if self.initialized:
            raise RuntimeError("already initialized")
        self.initialized = True
        dag = self.dag
        view = self.view
        store = view.store
        mark = len(store.removal_log)
        m = self.metrics
        m.start_step()
        try:
            for e in dag.edges:
                if not e.alive:
                    continue
                layer = e.src.layer
                info = self.infos[layer].get((e.lo, e.hi))
                if info is None:
                    info = IntervalInfo(layer, e.lo, e.hi)
                    self.infos[layer][(e.lo, e.hi)] = info
                info.edges[e.id] = e
                e.info = info
            vq = []
            dead_seed = []
            for layer in range(1, dag.n_vars + 1):
                layer_infos = list(self.infos[layer].values())
                self.trees[layer] = _build_tree(layer_infos)
                cov = self.cover[layer]
                for info in layer_infos:
                    cnt = 0
                    for v in range(info.lo, info.hi + 1):
                        if view.contains(layer, v):
                            cnt += 1
                            cov[v] = cov.get(v, 0) + 1
                    info.valid_count = cnt
                    if cnt == 0:
                        dead_seed.append(info)
            st = []
            for info in dead_seed:
                self._interval_died(info, vq, st)
            self._kill_edges(st, vq)
            self._structural_prune(vq)
            for layer in range(1, dag.n_vars + 1):
                cov = self.cover[layer]
                for v in list(view.values(layer)):
                    if cov.get(v, 0) == 0:
                        vq.append((layer, v))
            self._drain(vq)
            m.end_step()
            return [(a, b) for a, b, _ in store.removal_log[mark:]]
        except _Fail:
            self._set_failed()
            m.end_step()
            return None

    def _structural_prune(self, vq):
        dag = self.dag
        root = dag.root
        if not root.alive:
            raise _Fail
        reached = bytearray(len(dag.nodes))
        reached[root.id] = 1
        stack = [root]
        while stack:
            u = stack.pop()
            e = u.out_head
            while e is not None:
                if not reached[e.dst.id]:
                    reached[e.dst.id] = 1
                    stack.append(e.dst)
                e = e.out_next
        if not reached[dag.terminal.id]:
            raise _Fail
        st = []
        for u in dag.nodes:
            if u.alive and not reached[u.id]:
                self._kill_node(u)
                e = u.out_head
                while e is not None:
                    st.append(e)
                    e = e.out_next
        for u in dag.nodes:
            if u.alive and u.out_deg == 0 and u is not dag.terminal:
                if u is dag.root:
                    raise _Fail
                self._kill_node(u)
                e = u.in_head
                while e is not None:
                    st.append(e)
                    e = e.in_next
        self._kill_edges(st, vq)

    def remove(self, pairs):
        """Remove the pairs (and anything that loses interval cover) via
        stabbing queries; returns deltas or None on failure."""
        if not self.initialized:
            raise RuntimeError("initialize() first")
        view = self.view
        store = view.store
        mark = len(store.removal_log)
        m = self.metrics
        m.start_step()
        try:
            self._drain(list(pairs))
            m.end_step()
            return [(a, b) for a, b, _ in store.removal_log[mark:]]
        except _Fail:
            self._set_failed()
            m.end_step()
            return None

    def _drain(self, vq):
        view = self.view
        idx = 0
        while idx < len(vq):
            i, v = vq[idx]
            idx += 1
            if view.contains(i, v):
                view.remove(i, v)
                if view.size(i) == 0:
                    raise _Fail
            self._account(i, v, vq)

    def _account(self, i, v, vq):
        key = (i, v)
        if key in self._processed:
            return
        self._processed.add(key)
        self.trail.ops.append((self._undo_processed, key))
        hits = []
        _stab(self.trees[i], v, hits)
        m = self.metrics
        st = []
        for info in hits:
            if not info.alive:
                continue
            info.valid_count -= 1
            m.interval_decrements += 1
            self.trail.ops.append((self._undo_count, info))
            if info.valid_count == 0:
                self._interval_died(info, vq, st)
        if st:
            self._kill_edges(st, vq)

    def _undo_processed(self, key):
        self._processed.discard(key)

    def _undo_count(self, info):
        info.valid_count += 1

    def _interval_died(self, info, vq, st):
        info.alive = False
        self.trail.ops.append((self._undo_interval_died, info))
        cov = self.cover[info.layer]
        view = self.view
        for v in range(info.lo, info.hi + 1):
            c = cov.get(v)
            if c is None:
                continue
            cov[v] = c - 1
            if c == 1 and view.contains(info.layer, v):
                vq.append((info.layer, v))
        self.trail.ops.append((self._undo_cover_span, info))
        st.extend(info.edges.values())

    def _undo_interval_died(self, info):
        info.alive = True

    def _undo_cover_span(self, info):
        cov = self.cover[info.layer]
        for v in range(info.lo, info.hi + 1):
            if v in cov:
                cov[v] += 1

    def _kill_edges(self, st, vq):
        dag = self.dag
        m = self.metrics
        while st:
            e = st.pop()
            if not e.alive:
                continue
            e.alive = False
            unlink_out(e)
            unlink_in(e)
            dag.live_edge_count -= 1
            m.t_remove_calls += 1
            m.s_remove_calls += 1
            m.remove_calls_path += 1
            self.trail.ops.append((self._undo_kill_edge, e))
            info = e.info
            if info is not None and info.alive:
                del info.edges[e.id]
                self.trail.ops.append((self._undo_info_member, info, e))
                if not info.edges:
                    self._interval_died(info, vq, st)
            src, dst = e.src, e.dst
            if src.alive and src.out_deg == 0:
                if src is dag.root:
                    raise _Fail
                self._kill_node(src)
                w = src.in_head
                while w is not None:
                    st.append(w)
                    w = w.in_next
            if dst.alive and dst.in_deg == 0 and dst is not dag.root:
                if dst is dag.terminal:
                    raise _Fail
                self._kill_node(dst)
                w = dst.out_head
                while w is not None:
                    st.append(w)
                    w = w.out_next

    def _undo_kill_edge(self, e):
        e.alive = True
        relink_out(e)
        relink_in(e)
        self.dag.live_edge_count += 1

    def _undo_info_member(self, info, e):
        info.edges[e.id] = e

    def _kill_node(self, u):
        u.alive = False
        self.trail.ops.append((self._undo_kill_node, u))

    def _undo_kill_node(self, u):
        u.alive = True

    def _set_failed(self):
        if not self.failed:
            self.failed = True
            self.trail.ops.append((self._undo_failed,))

    def _undo_failed(self):
        self.failed = False
