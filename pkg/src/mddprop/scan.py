"""Full-scan GAC: recompute the valid domains from scratch each step.

A depth-first pass from the root deletes edges whose label is no longer
allowed or whose child is dead this step, marks nodes live on the first
terminal-reaching path, and collects the supported values.  Edge
deletion is mark-based and trailed; node liveness is per-step scratch
(generation-stamped), so between steps the diagram may hold node flags
that no longer reflect reachability - the scan never reads them.

One propagator owns one diagram instance; do not mix scan and dynamic
propagation on the same arenas.
"""

from __future__ import annotations

from .mdd import (
    Mdd, WILD, StepMetrics,
    unlink_out, relink_out, unlink_in, relink_in,
)
from .state import DomainStore
from .reduce import HashFamily


class ScanPropagator:
    """Baseline propagator: RemoveScan with an optional delta cutoff.

    The cutoff skips the unvisited children of a node already known
    alive, but only on layers whose discovered valid values have already
    reached the previous step's final values (valid domains shrink
    monotonically within a descent, so such layers cannot yield anything
    new).  It changes traversal counts, never the returned deltas, and
    disarms after a backtrack - the monotonicity argument only holds
    within one descent.
    """

    def __init__(self, mdd: Mdd, domains, *, delta_cutoff=False, metrics=None):
        if isinstance(domains, DomainStore):
            view = domains.identity_view()
        else:
            view = domains
        if view.n != mdd.n_vars:
            raise ValueError("domain scope does not match the MDD")
        self.mdd = mdd
        self.view = view
        self.trail = view.store.trail
        self.delta_cutoff = delta_cutoff
        self.metrics = metrics if metrics is not None else StepMetrics()
        self.trail.attach_metrics(self.metrics)
        n_nodes = len(mdd.nodes)
        self.mark_gen = [0] * n_nodes
        self.mark_live = bytearray(n_nodes)
        self.gen = 0
        self.prev_valid = None   # previous step's final valid sets
        self.delta = mdd.n_vars + 1
        self._seen_backtracks = self.trail.backtracks
        self.initialized = False

    def initialize(self):
        """First scan: prunes anything inconsistent with the initial
        domains and reports the removals."""
        self.initialized = True
        return self.remove([])

    def is_entailed(self) -> bool:
        return False  # scan mode keeps no structure to detect entailment

    def remove(self, pairs):
        """Apply the removals, rescan, and shrink the domains to the
        discovered valid values.  Returns the (variable, value) pairs
        removed from the store, or None when the root died."""
        view = self.view
        store = view.store
        trail = self.trail
        if trail.backtracks != self._seen_backtracks:
            self._seen_backtracks = trail.backtracks
            self.prev_valid = None
            self.delta = self.mdd.n_vars + 1
        m = self.metrics
        m.start_step()
        mark = len(store.removal_log)
        try:
            for i, v in pairs:
                if view.contains(i, v):
                    view.remove(i, v)
                    if view.size(i) == 0:
                        raise _ScanFail
            if not self._scan():
                raise _ScanFail
            n = self.mdd.n_vars
            eff = [None] * (n + 1)
            for k in range(1, n + 1):
                ok = self.valid[k]
                for v in list(view.values(k)):
                    if v not in ok:
                        view.remove(k, v)
                if view.size(k) == 0:
                    raise _ScanFail  # cannot happen while the root lives
                eff[k] = frozenset(view.values(k))
            prev = self.prev_valid
            delta = n + 1
            if prev is not None:
                for k in range(n, 0, -1):
                    if eff[k] != prev[k]:
                        break
                    delta = k
            self.delta = delta
            self.prev_valid = eff
            m.end_step()
            return [(a, b) for a, b, _ in store.removal_log[mark:]]
        except _ScanFail:
            self.prev_valid = None
            self.delta = self.mdd.n_vars + 1
            m.end_step()
            return None

    # -- the depth-first pass ---------------------------------------------

    def _discover(self, layer: int, value):
        s = self.valid[layer]
        if value not in s:
            s.add(value)
            prev = self.prev_valid
            if prev is not None and len(s) == len(prev[layer]):
                self._done[layer] = True

    def _discover_all(self, layer: int):
        # a live long edge span, wildcard edge, or the root prefix makes
        # every current value of the layer valid
        if self._full[layer]:
            return
        self._full[layer] = True
        s = self.valid[layer]
        s.update(self.view.values(layer))
        prev = self.prev_valid
        if prev is not None and len(s) == len(prev[layer]):
            self._done[layer] = True

    def _suffix_done(self, layer: int) -> bool:
        hi = self._hi
        done = self._done
        while hi > 1 and done[hi - 1]:
            hi -= 1
        self._hi = hi
        return layer >= hi

    def _record_valid(self, e):
        u = e.src
        lab = e.label
        if lab is WILD:
            self._discover_all(u.layer)
        else:
            self._discover(u.layer, lab)
            if e.dst.layer > u.layer + 1:
                for k in range(u.layer + 1, e.dst.layer):
                    self._discover_all(k)

    def _scan(self) -> bool:
        mdd = self.mdd
        view = self.view
        n = mdd.n_vars
        self.gen += 1
        gen = self.gen
        mgen = self.mark_gen
        mlive = self.mark_live
        self.valid = [None] + [set() for _ in range(n)]
        self._full = [False] * (n + 2)
        self._done = [False] * (n + 2)
        self._hi = n + 1
        m = self.metrics
        term = mdd.terminal
        mgen[term.id] = gen
        mlive[term.id] = 1
        root = mdd.root
        for k in range(1, root.layer):
            self._discover_all(k)
        if root is term:
            return True
        cutoff = self.delta_cutoff and self.prev_valid is not None
        # frame: [node, cursor edge, alive, edge awaiting its child's verdict]
        stack = [[root, root.out_head, False, None]]
        while stack:
            f = stack[-1]
            u = f[0]
            pend = f[3]
            if pend is not None:
                f[3] = None
                if mlive[pend.dst.id]:
                    f[2] = True
                    self._record_valid(pend)
                else:
                    self._kill_edge(pend)
            e = f[1]
            descended = False
            while e is not None:
                if cutoff and f[2] and self._suffix_done(u.layer):
                    e = None
                    break
                nxt = e.out_next
                m.s_scan_edges += 1
                m.t_scan_edges += 1
                lab = e.label
                if lab is not WILD and not view.contains(u.layer, lab):
                    self._kill_edge(e)
                    e = nxt
                    continue
                c = e.dst
                if mgen[c.id] == gen:
                    if mlive[c.id]:
                        f[2] = True
                        self._record_valid(e)
                    else:
                        self._kill_edge(e)
                    e = nxt
                    continue
                f[1] = nxt
                f[3] = e
                stack.append([c, c.out_head, False, None])
                descended = True
                break
            if descended:
                continue
            f[1] = e
            mgen[u.id] = gen
            mlive[u.id] = 1 if f[2] else 0
            stack.pop()
        return mlive[root.id] == 1

    def _kill_edge(self, e):
        e.alive = False
        unlink_out(e)
        unlink_in(e)
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
        m.s_died_no_value += 1
        m.t_died_no_value += 1
        self.trail.ops.append((self._undo_kill_edge, e))

    def _undo_kill_edge(self, e):
        e.alive = True
        relink_out(e)
        relink_in(e)
        self.mdd.live_edge_count += 1
        cc = e.src.child_count
        did = e.dst.id
        old = cc.get(did, 0)
        cc[did] = old + 1
        if old == 0 and e.src.alive and len(cc) == 2:
            self.mdd.multi_child_count += 1


class _ScanFail(Exception):
    pass


class NoGoodStore:
    """Projected partial assignments known to fail, shared across
    constraints of identical diagram shape on different scopes.

    Assignments are keyed by (scope position, value) pairs, fingerprinted
    with the strongly universal family; the full assignment is kept to
    resolve fingerprint collisions exactly, so a hit is never spurious.
    """

    def __init__(self, family: HashFamily | None = None):
        self.family = family if family is not None else HashFamily(1)
        self.buckets: dict = {}

    def _key(self, shape_id: str, assignment):
        a = tuple(sorted(assignment))
        fp = 0
        fam = self.family
        for pos, val in a:
            fp ^= fam.nogood_hash(pos, val)
        return (shape_id, fp), a

    def record(self, shape_id: str, assignment):
        key, a = self._key(shape_id, assignment)
        bucket = self.buckets.setdefault(key, [])
        if a not in bucket:
            bucket.append(a)

    def check(self, shape_id: str, assignment) -> bool:
        """True iff this projected assignment is a recorded no-good."""
        key, a = self._key(shape_id, assignment)
        return a in self.buckets.get(key, ())
