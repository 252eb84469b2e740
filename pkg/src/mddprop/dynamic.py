"""Incremental GAC propagation over one MDD.

Instead of rescanning, the propagator tracks the loss of supporting
edges.  Removing assignment (x_i, v) drains the support list s[i, v];
each edge death unlinks O(1) cells and may cascade: a node losing its
last outgoing edge dies a no-value death (condemning its incoming
edges), a node losing its last incoming edge dies a no-reference death
(condemning its outgoing edges).  After the initial condemnation a
cascade propagates purely upward or purely downward, never both.

Every mutation lands on the shared trail, so `Trail.backtrack` restores
the exact pre-phase state including support lists, interval counters,
signatures and reduction tables.  After a step returns Failed the state
is mid-cascade garbage by design; the caller must backtrack.
"""

from __future__ import annotations

from .mdd import (
    Mdd, WILD, KIND_PLAIN, KIND_LONG, StepMetrics,
    link_in, unlink_in, relink_in, unlink_out, relink_out,
)
from .state import DomainStore, DomainView
from .longedge import LongEdgeRegistry, WildcardState
from .reduce import HashFamily, ReduceState


class _Fail(Exception):
    """Internal: constraint became unsatisfiable mid-step."""


class SupportIndex:
    """Doubly-linked lists s[i, v] of the live edges whose own label
    witnesses assignment (x_i, v).

    Long edges sit in the list of their source-layer label like any
    other edge; their skipped span is LongEdgeRegistry business.
    Wildcard edges are not indexed at all.
    """

    __slots__ = ("heads",)

    def __init__(self):
        self.heads: dict = {}

    def link(self, e):
        key = (e.src.layer, e.label)
        e.sup_key = key
        h = self.heads.get(key)
        e.sup_prev = None
        e.sup_next = h
        if h is not None:
            h.sup_prev = e
        self.heads[key] = e

    def unlink(self, e):
        p, nx = e.sup_prev, e.sup_next
        if p is None:
            self.heads[e.sup_key] = nx
        else:
            p.sup_next = nx
        if nx is not None:
            nx.sup_prev = p

    def relink(self, e):
        p, nx = e.sup_prev, e.sup_next
        if p is None:
            self.heads[e.sup_key] = e
        else:
            p.sup_next = e
        if nx is not None:
            nx.sup_prev = e

    def edges(self, i: int, v) -> list:
        out = []
        e = self.heads.get((i, v))
        while e is not None:
            out.append(e)
            e = e.sup_next
        return out


def init_supports(mdd: Mdd, domains=None) -> SupportIndex:
    """Standalone support-list construction over the live labelled edges.

    The diagram must already be GAC-consistent (run a scan first
    otherwise).  Space is one list cell per live non-wildcard edge.
    """
    idx = SupportIndex()
    for e in mdd.edges:
        if e.alive and e.label is not WILD:
            idx.link(e)
    return idx


class MddPropagator:
    """Dynamic GAC propagator bound to a shared DomainStore and Trail.

    reduce_mode: "off", "uniqueness" (dynamic subsumption) or "full"
    (additionally rewrite full-coverage single-child nodes into long
    edges and detect entailment as collapse to the terminal).
    """

    def __init__(self, mdd: Mdd, domains, *, reduce_mode="off", hash_seed=0,
                 hash_family=None, metrics=None):
        if isinstance(domains, DomainStore):
            view = domains.identity_view()
        else:
            view = domains
        if view.n != mdd.n_vars:
            raise ValueError(f"domain scope has {view.n} variables, MDD has {mdd.n_vars}")
        if reduce_mode not in ("off", "uniqueness", "full"):
            raise ValueError(f"bad reduce mode {reduce_mode!r}")
        self.mdd = mdd
        self.view = view
        self.trail = view.store.trail
        self.supports = SupportIndex()
        self.registry = LongEdgeRegistry(mdd.n_vars, self.trail)
        has_wild = any(u.is_wildcard and u.alive for u in mdd.nodes)
        if has_wild and reduce_mode == "full":
            raise ValueError("full reduction operates on long-edge diagrams, "
                             "not wildcard diagrams")
        self.wilds = WildcardState(mdd.n_vars, self.trail) if has_wild else None
        self.reduce_mode = reduce_mode
        self.reducer = None
        self._family = hash_family or HashFamily(hash_seed)
        self.metrics = metrics if metrics is not None else StepMetrics()
        self.trail.attach_metrics(self.metrics)
        self.failed = False
        self.initialized = False
        self.initial_live_edges = 0
        self.path_base = 0

    # -- lifecycle -------------------------------------------------------

    def initialize(self):
        """Prune to the GAC core, build supports/registries/signatures and
        sync the domains.  Returns the initial domain deltas, or None on
        failure.  Runs once, before the first checkpoint."""
        if self.initialized:
            raise RuntimeError("already initialized")
        self.initialized = True
        view = self.view
        store = view.store
        mark = len(store.removal_log)
        m = self.metrics
        m.start_step()
        try:
            if self.wilds is not None:
                for u in self.mdd.nodes:
                    if u.alive and u.is_wildcard:
                        self.wilds.init_count(u.layer)
            self._cleanup()
            mdd = self.mdd
            for e in mdd.edges:
                if e.alive:
                    if e.label is not WILD:
                        self.supports.link(e)
                    if e.kind == KIND_LONG:
                        self.registry.add_interval(e.src.layer + 1, e.dst.layer - 1)
            if self.reduce_mode != "off":
                self.reducer = ReduceState(self, self.reduce_mode, self._family)
                self.reducer.init_signatures(self)
            heads = self.supports.heads
            wilds = self.wilds
            root_layer = mdd.root.layer
            for i in range(1, mdd.n_vars + 1):
                wild_layer = wilds is not None and wilds.w[i] > 0
                covered = self.registry.cover[i] > 0 or i < root_layer
                for v in list(view.values(i)):
                    if heads.get((i, v)) is None:
                        # mirrors the runtime support-loss rule: a value
                        # alive only through wildcards must sit in the
                        # deferred list so the last wildcard's death
                        # flushes it
                        if wild_layer:
                            wilds.defer(i, v)
                        elif not covered:
                            self._domain_removed(i, v)
            if self.reducer is not None:
                self.reducer.process(self)
            self.initial_live_edges = mdd.live_edge_count
            self.path_base = m.remove_calls_path
            m.end_step()
            return [(a, b) for a, b, _ in store.removal_log[mark:]]
        except _Fail:
            self._set_failed()
            m.end_step()
            return None

    def _cleanup(self):
        """Structural prune: drop edges whose label left the domain, then
        everything unreachable from the root or cut off from the
        terminal."""
        mdd = self.mdd
        view = self.view
        for e in mdd.edges:
            if e.alive and e.label is not WILD and not view.contains(e.src.layer, e.label):
                self._kill_edge_core(e)
        root = mdd.root
        if root is None or not root.alive:
            raise _Fail
        reached = bytearray(len(mdd.nodes))
        reached[root.id] = 1
        stack = [root]
        while stack:
            u = stack.pop()
            e = u.out_head
            while e is not None:
                c = e.dst
                if not reached[c.id]:
                    reached[c.id] = 1
                    stack.append(c)
                e = e.out_next
        if not reached[mdd.terminal.id]:
            raise _Fail
        for u in mdd.nodes:
            if u.alive and not reached[u.id]:
                e = u.out_head
                while e is not None:
                    nxt = e.out_next
                    self._kill_edge_core(e)
                    e = nxt
                self.kill_node(u)
        stack = [u for u in mdd.nodes
                 if u.alive and u.out_deg == 0 and u is not mdd.terminal]
        while stack:
            u = stack.pop()
            if not u.alive or u.out_deg:
                continue
            if u is mdd.root:
                raise _Fail
            self.kill_node(u)
            e = u.in_head
            while e is not None:
                nxt = e.in_next
                p = e.src
                self._kill_edge_core(e)
                if p.alive and p.out_deg == 0 and p is not mdd.terminal:
                    stack.append(p)
                e = nxt

    # -- the propagation step ---------------------------------------------

    def remove(self, pairs):
        """Remove the (variable, value) pairs and propagate to the GAC
        fixpoint of this constraint.

        Argument values leave the domains first (long-edge coverage may
        nominally over-support exactly those), then each support list is
        drained through the death cascade, then the reduction sweep runs.
        Returns every (variable, value) removed from the store during the
        call (store indices), or None when the constraint failed - in
        which case the caller must backtrack.
        """
        if not self.initialized:
            raise RuntimeError("initialize() first")
        view = self.view
        store = view.store
        mark = len(store.removal_log)
        m = self.metrics
        m.start_step()
        red = self.reducer
        try:
            for i, v in pairs:
                if view.contains(i, v):
                    self._domain_removed(i, v)
                elif red is not None and red.mode == "full":
                    red.pending_layers.add(i)
            heads = self.supports.heads
            for i, v in pairs:
                e = heads.get((i, v))
                while e is not None:
                    nxt = e.sup_next
                    if e.alive:
                        self.remove_edge(e)
                    e = nxt
            if red is not None:
                red.process(self)
            m.end_step()
            return [(a, b) for a, b, _ in store.removal_log[mark:]]
        except _Fail:
            self._set_failed()
            m.end_step()
            return None

    def assign(self, i: int, v):
        """Restrict variable i to v: a Remove of every other current value."""
        if not self.view.contains(i, v):
            raise ValueError(f"value {v} not in current domain of variable {i}")
        return self.remove([(i, w) for w in sorted(self.view.values(i)) if w != v])

    def remove_edge(self, e):
        """Condemn one live edge and run its death cascade to quiescence."""
        q = []
        self._kill_edge_full(e, 0, q)
        while q:
            e2, dirn = q.pop()
            if e2.alive:
                self._kill_edge_full(e2, dirn, q)

    def checkpoint(self) -> int:
        return self.trail.checkpoint()

    def backtrack(self):
        self.trail.backtrack()

    def is_entailed(self) -> bool:
        """Domain entailment, valid right after a completed propagation
        step: not failed and the live diagram is a node path (at most one
        live node per layer and no node branching to two distinct
        children - a long edge bypassing a populated layer supports its
        skipped values only along its own branch, so the layer counter
        alone over-reports).  In full-reduction mode this degenerates to
        the root being the terminal."""
        mdd = self.mdd
        return (not self.failed and mdd.layers_leq_one == mdd.n_vars + 1
                and mdd.multi_child_count == 0)

    # -- kill machinery ----------------------------------------------------

    def _kill_edge_core(self, e):
        e.alive = False
        unlink_out(e)
        unlink_in(e)
        if e.sup_key is not None:
            self.supports.unlink(e)
        self.mdd.live_edge_count -= 1
        src = e.src
        cc = src.child_count
        did = e.dst.id
        nv = cc[did] - 1
        if nv:
            cc[did] = nv
        else:
            del cc[did]
            if src.alive and len(cc) == 1:
                self.mdd.multi_child_count -= 1
        m = self.metrics
        m.t_remove_calls += 1
        m.s_remove_calls += 1
        m.remove_calls_path += 1
        red = self.reducer
        if red is not None:
            fam = red.family
            src.sig ^= fam.child_hash(e.label, did)
            src.label_sig ^= fam.label_set_hash(src.layer, e.label)
            if src.alive:
                red.mark_dirty(src)
            red.sc_transition(self, src)
        self.trail.ops.append((self._undo_kill_edge, e))

    def _undo_kill_edge(self, e):
        e.alive = True
        relink_out(e)
        relink_in(e)
        if e.sup_key is not None:
            self.supports.relink(e)
        self.mdd.live_edge_count += 1
        src = e.src
        cc = src.child_count
        did = e.dst.id
        old = cc.get(did, 0)
        cc[did] = old + 1
        if old == 0 and src.alive and len(cc) == 2:
            self.mdd.multi_child_count += 1
        red = self.reducer
        if red is not None:
            fam = red.family
            src.sig ^= fam.child_hash(e.label, did)
            src.label_sig ^= fam.label_set_hash(src.layer, e.label)
            # index/table entries restore via their own records; dirty
            # flags are untrailed (a stale recheck is a no-op)

    def kill_edge_noncascade(self, e):
        """Edge deletion without death checks: merge and collapse rewrites
        guarantee the endpoints keep their references."""
        self._kill_edge_core(e)
        k = e.sup_key
        if k is not None and self.supports.heads.get(k) is None:
            self._support_gone(k[0], k[1])
        if e.kind == KIND_LONG:
            self._long_edge_died(e)

    def _kill_edge_full(self, e, dirn, q):
        self._kill_edge_core(e)
        m = self.metrics
        if dirn == 2:
            m.t_died_no_reference += 1
            m.s_died_no_reference += 1
        else:
            m.t_died_no_value += 1
            m.s_died_no_value += 1
        k = e.sup_key
        if k is not None and self.supports.heads.get(k) is None:
            self._support_gone(k[0], k[1])
        if e.kind == KIND_LONG:
            self._long_edge_died(e)
        mdd = self.mdd
        src = e.src
        dst = e.dst
        if src.out_deg == 0 and src.alive:
            if src is mdd.root:
                raise _Fail
            if dirn == 2:
                m.direction_violations += 1
            self.kill_node(src)
            w = src.in_head
            while w is not None:
                q.append((w, 1))
                w = w.in_next
        if dst.in_deg == 0 and dst.alive and dst is not mdd.root:
            if dst is mdd.terminal:
                raise _Fail
            if dirn == 1:
                m.direction_violations += 1
            self.kill_node(dst)
            w = dst.out_head
            while w is not None:
                q.append((w, 2))
                w = w.out_next

    def kill_node(self, u):
        u.alive = False
        self.mdd.bump_layer(u.layer, -1)
        if len(u.child_count) >= 2:
            self.mdd.multi_child_count -= 1
        self.trail.ops.append((self._undo_kill_node, u))
        if self.reducer is not None:
            self.reducer.drop_node(self, u)
        if u.is_wildcard and self.wilds is not None:
            layer = u.layer
            for v in self.wilds.wildcard_died(layer):
                if self.view.contains(layer, v):
                    self._domain_removed(layer, v)

    def _undo_kill_node(self, u):
        u.alive = True
        self.mdd.bump_layer(u.layer, 1)
        if len(u.child_count) >= 2:
            self.mdd.multi_child_count += 1

    def set_root(self, child):
        old = self.mdd.root
        self.mdd.root = child
        self.trail.ops.append((self._undo_set_root, old))

    def _undo_set_root(self, old):
        self.mdd.root = old

    # -- support consequences ----------------------------------------------

    def _domain_removed(self, i: int, v):
        view = self.view
        view.remove(i, v)
        if view.size(i) == 0:
            raise _Fail
        red = self.reducer
        if red is not None and red.mode == "full":
            red.pending_layers.add(i)

    def _support_gone(self, i: int, v):
        # support list s[i, v] just emptied
        view = self.view
        if not view.contains(i, v):
            return
        w = self.wilds
        if w is not None and w.w[i] > 0:
            w.defer(i, v)
            return
        if self.registry.cover[i] > 0 or i < self.mdd.root.layer:
            return
        self._domain_removed(i, v)

    def _long_edge_died(self, e):
        uncovered = self.registry.remove_interval(e.src.layer + 1, e.dst.layer - 1)
        if not uncovered:
            return
        view = self.view
        heads = self.supports.heads
        w = self.wilds
        root_layer = self.mdd.root.layer
        for k in uncovered:
            if k < root_layer or (w is not None and w.w[k] > 0):
                continue
            for v in list(view.values(k)):
                if heads.get((k, v)) is None:
                    self._domain_removed(k, v)

    # -- rewrite moves (called by the reduce engine) -------------------------

    def move_edge_dest(self, e, new_dst):
        """Subsumption move: redirect e to the same-layer twin."""
        old = e.dst
        saved_prev, saved_next = e.in_prev, e.in_next
        unlink_in(e)
        e.dst = new_dst
        link_in(e)
        src = e.src
        cc = src.child_count
        before = len(cc) >= 2
        ov = cc[old.id] - 1
        if ov:
            cc[old.id] = ov
        else:
            del cc[old.id]
        cc[new_dst.id] = cc.get(new_dst.id, 0) + 1
        if src.alive and (len(cc) >= 2) != before:
            self.mdd.multi_child_count += 1 if len(cc) >= 2 else -1
        red = self.reducer
        fam = red.family
        src.sig ^= fam.child_hash(e.label, old.id) ^ fam.child_hash(e.label, new_dst.id)
        red.mark_dirty(src)
        red.sc_transition(self, src)
        self.metrics.moved(e.id)
        self.trail.ops.append((self._undo_move, e, old, saved_prev, saved_next))

    def _undo_move(self, e, old, saved_prev, saved_next):
        new_dst = e.dst
        unlink_in(e)
        e.dst = old
        e.in_prev = saved_prev
        e.in_next = saved_next
        relink_in(e)
        src = e.src
        cc = src.child_count
        before = len(cc) >= 2
        nv = cc[new_dst.id] - 1
        if nv:
            cc[new_dst.id] = nv
        else:
            del cc[new_dst.id]
        cc[old.id] = cc.get(old.id, 0) + 1
        if src.alive and (len(cc) >= 2) != before:
            self.mdd.multi_child_count += 1 if len(cc) >= 2 else -1
        fam = self.reducer.family
        src.sig ^= fam.child_hash(e.label, old.id) ^ fam.child_hash(e.label, new_dst.id)
        self.metrics.unmoved(e.id)

    def redirect_edge_deeper(self, e, new_dst):
        """Full-reduction move: lengthen e past its collapsing endpoint.

        The widened interval is registered before the old one is dropped
        so the spliced span never goes uncovered in between.
        """
        old = e.dst
        i = e.src.layer + 1
        self.registry.add_interval(i, new_dst.layer - 1)
        was_long = e.kind == KIND_LONG
        if was_long:
            self.registry.remove_interval(i, old.layer - 1)
        saved_prev, saved_next = e.in_prev, e.in_next
        unlink_in(e)
        e.dst = new_dst
        e.kind = KIND_LONG
        link_in(e)
        src = e.src
        cc = src.child_count
        before = len(cc) >= 2
        ov = cc[old.id] - 1
        if ov:
            cc[old.id] = ov
        else:
            del cc[old.id]
        cc[new_dst.id] = cc.get(new_dst.id, 0) + 1
        if src.alive and (len(cc) >= 2) != before:
            self.mdd.multi_child_count += 1 if len(cc) >= 2 else -1
        red = self.reducer
        fam = red.family
        src.sig ^= fam.child_hash(e.label, old.id) ^ fam.child_hash(e.label, new_dst.id)
        red.mark_dirty(src)
        red.sc_transition(self, src)
        self.metrics.t_redirects += 1
        self.trail.ops.append((self._undo_redirect, e, old, was_long,
                               saved_prev, saved_next))

    def _undo_redirect(self, e, old, was_long, saved_prev, saved_next):
        new_dst = e.dst
        unlink_in(e)
        e.dst = old
        e.kind = KIND_LONG if was_long else KIND_PLAIN
        e.in_prev = saved_prev
        e.in_next = saved_next
        relink_in(e)
        src = e.src
        cc = src.child_count
        before = len(cc) >= 2
        nv = cc[new_dst.id] - 1
        if nv:
            cc[new_dst.id] = nv
        else:
            del cc[new_dst.id]
        cc[old.id] = cc.get(old.id, 0) + 1
        if src.alive and (len(cc) >= 2) != before:
            self.mdd.multi_child_count += 1 if len(cc) >= 2 else -1
        fam = self.reducer.family
        src.sig ^= fam.child_hash(e.label, old.id) ^ fam.child_hash(e.label, new_dst.id)

    def _set_failed(self):
        if not self.failed:
            self.failed = True
            self.trail.ops.append((self._undo_failed,))

    def _undo_failed(self):
        self.failed = False
