"""Dynamic reduction machinery: XOR-composable node signatures, the
redundancy table, bottom-up subsumption, and full reduction under the
current domains.

A node is hashed as (outgoing edge set, layer): the signature is the XOR
of one memoized strongly universal hash value per live edge plus a layer
constant, so deleting or redirecting an edge updates it with two XORs.
Absent edges contribute nothing (the all-dead vector never occurs as a
key, so no null-element term is needed).
"""

from __future__ import annotations

import random

from .mdd import WILD

_M64 = (1 << 64) - 1
_M128 = (1 << 128) - 1


class HashFamily:
    """Seeded, memoized, strongly universal hash values.

    Each position tag owns a degree-1 polynomial over 128-bit arithmetic;
    values are the top `bits` bits of (a*key + b) mod 2^128, and
    truncation preserves strong universality.  All values are
    reproducible from the seed alone.
    """

    __slots__ = ("seed", "bits", "_shift", "_memo", "_params")

    def __init__(self, seed: int = 0, bits: int = 64):
        if not 1 <= bits <= 64:
            raise ValueError("bits must be in 1..64")
        self.seed = seed
        self.bits = bits
        self._shift = 128 - bits
        self._memo = {}
        self._params = {}

    def _hash(self, tag, key: int) -> int:
        mk = (tag, key)
        h = self._memo.get(mk)
        if h is None:
            p = self._params.get(tag)
            if p is None:
                rng = random.Random(f"{self.seed}|{tag!r}")
                p = (rng.getrandbits(128), rng.getrandbits(128))
                self._params[tag] = p
            h = ((p[0] * ((key & _M64) + 1) + p[1]) & _M128) >> self._shift
            self._memo[mk] = h
        return h

    def child_hash(self, label, child_id: int) -> int:
        return self._hash(("c", label), child_id)

    def layer_hash(self, layer: int) -> int:
        return self._hash(("l",), layer)

    def label_set_hash(self, layer: int, value) -> int:
        if value is WILD:
            return self._hash(("sw",), layer)
        return self._hash(("s", layer), value)

    def nogood_hash(self, position: int, value) -> int:
        return self._hash(("g", position), value)


def node_signature(family: HashFamily, u) -> int:
    """From-scratch signature of a node (oracle for the incremental one)."""
    sig = family.layer_hash(u.layer)
    e = u.out_head
    while e is not None:
        sig ^= family.child_hash(e.label, e.dst.id)
        e = e.out_next
    return sig


def label_set_signature(family: HashFamily, u) -> int:
    sig = 0
    e = u.out_head
    while e is not None:
        sig ^= family.label_set_hash(u.layer, e.label)
        e = e.out_next
    return sig


def _same_children(mdd, a, b) -> bool:
    if a.out_deg != b.out_deg:
        return False
    m = {e.label: e.dst.id for e in mdd.out_edges(a)}
    for e in mdd.out_edges(b):
        if m.get(e.label) != e.dst.id:
            return False
    return True


class ReduceState:
    """Per-propagator reduction state: redundancy table, single-child
    index, dirty queues and pending full-reduction layers.

    The table files every live non-terminal node under its current
    signature between steps; within a step entries go stale and are
    refiled when the dirty node is processed.  Equal signatures trigger a
    full outgoing-set comparison, so hash collisions can cost time but
    never correctness.
    """

    def __init__(self, prop, mode: str, family: HashFamily):
        if mode not in ("uniqueness", "full"):
            raise ValueError(f"bad reduce mode {mode!r}")
        self.mode = mode
        self.family = family
        self.table: dict[int, dict] = {}
        self.sc_index: dict[int, dict] = {}
        self.dirty = [[] for _ in range(prop.mdd.n_vars + 2)]
        self.pending_layers: set[int] = set()
        self.init_xor_count = 0
        self.fingerprint_conflicts = 0

    # -- initialization -------------------------------------------------

    def init_signatures(self, prop):
        """Build all signatures and tables; one XOR per live edge plus one
        per live node for the uniqueness signatures."""
        mdd = prop.mdd
        fam = self.family
        xors = 0
        for u in mdd.nodes:
            if not u.alive:
                continue
            sig = fam.layer_hash(u.layer)
            xors += 1
            lsig = 0
            e = u.out_head
            while e is not None:
                sig ^= fam.child_hash(e.label, e.dst.id)
                xors += 1
                lsig ^= fam.label_set_hash(u.layer, e.label)
                e = e.out_next
            u.sig = sig
            u.label_sig = lsig
            if u is not mdd.terminal:
                u.table_sig = sig
                self.table.setdefault(sig, {})[u.id] = u
                if len(u.child_count) == 1:
                    u.sc_key = lsig
                    self.sc_index.setdefault(lsig, {})[u.id] = u
                u.dirty = True
                self.dirty[u.layer].append(u)
        self.init_xor_count = xors
        self.pending_layers.update(range(1, mdd.n_vars + 1))

    # -- incremental bookkeeping ----------------------------------------

    def mark_dirty(self, u):
        if not u.dirty:
            u.dirty = True
            self.dirty[u.layer].append(u)

    def sc_transition(self, prop, u):
        """Refile u in the single-child index after an outgoing change."""
        desired = None
        if u.alive and u.out_deg >= 1 and len(u.child_count) == 1 \
                and u is not prop.mdd.terminal:
            desired = u.label_sig
        key = u.sc_key
        if key == desired:
            return
        trail = prop.trail.ops
        if key is not None:
            bucket = self.sc_index[key]
            del bucket[u.id]
            if not bucket:
                del self.sc_index[key]
            u.sc_key = None
            trail.append((self._undo_sc_remove, u, key))
        if desired is not None:
            self.sc_index.setdefault(desired, {})[u.id] = u
            u.sc_key = desired
            trail.append((self._undo_sc_add, u, desired))
            if self.mode == "full":
                self.pending_layers.add(u.layer)

    def _undo_sc_remove(self, u, key):
        self.sc_index.setdefault(key, {})[u.id] = u
        u.sc_key = key

    def _undo_sc_add(self, u, key):
        bucket = self.sc_index[key]
        del bucket[u.id]
        if not bucket:
            del self.sc_index[key]
        u.sc_key = None

    def drop_node(self, prop, u):
        """Remove a dying node from the table and single-child index."""
        key = u.table_sig
        if key is not None:
            bucket = self.table[key]
            del bucket[u.id]
            if not bucket:
                del self.table[key]
            u.table_sig = None
            prop.trail.ops.append((self._undo_table_del, u, key))
        if u.sc_key is not None:
            k = u.sc_key
            bucket = self.sc_index[k]
            del bucket[u.id]
            if not bucket:
                del self.sc_index[k]
            u.sc_key = None
            prop.trail.ops.append((self._undo_sc_remove, u, k))

    def _undo_table_del(self, u, key):
        self.table.setdefault(key, {})[u.id] = u
        u.table_sig = key

    def _undo_table_move(self, u, old_key):
        new_key = u.table_sig
        bucket = self.table[new_key]
        del bucket[u.id]
        if not bucket:
            del self.table[new_key]
        self.table.setdefault(old_key, {})[u.id] = u
        u.table_sig = old_key

    def domain_sig(self, view, layer: int) -> int:
        fam = self.family
        sig = 0
        for v in view.values(layer):
            sig ^= fam.label_set_hash(layer, v)
        return sig

    # -- the per-step sweep ----------------------------------------------

    def process(self, prop):
        """Bottom-up sweep (highest layer first): refile dirty nodes,
        subsume detected twins, then (full mode) collapse nodes covering
        their layer's whole current domain toward one child.  Every effect
        lands on a strictly lower layer, so one sweep per step suffices.
        """
        mdd = prop.mdd
        pend = self.pending_layers
        full = self.mode == "full"
        for layer in range(mdd.n_vars, 0, -1):
            q = self.dirty[layer]
            while q:
                u = q.pop()
                u.dirty = False
                if u.alive:
                    self._recheck(prop, u)
            if full and layer in pend:
                pend.discard(layer)
                dsig = self.domain_sig(prop.view, layer)
                bucket = self.sc_index.get(dsig)
                if bucket:
                    for u in list(bucket.values()):
                        if u.alive and u.layer == layer and self._collapse_ok(prop, u, layer):
                            self.collapse(prop, u)
        pend.clear()

    def _recheck(self, prop, u):
        if u.table_sig != u.sig:
            old = u.table_sig
            bucket = self.table[old]
            del bucket[u.id]
            if not bucket:
                del self.table[old]
            u.table_sig = u.sig
            self.table.setdefault(u.sig, {})[u.id] = u
            prop.trail.ops.append((self._undo_table_move, u, old))
        bucket = self.table.get(u.sig)
        if bucket is None or len(bucket) < 2:
            return
        mdd = prop.mdd
        for cand in list(bucket.values()):
            if cand is u or not cand.alive or cand.layer != u.layer:
                continue
            if not _same_children(mdd, u, cand):
                self.fingerprint_conflicts += 1
                continue
            if cand.in_deg > u.in_deg or (cand.in_deg == u.in_deg and u.id < cand.id):
                self.merge(prop, u, cand)
                return  # u is gone
            self.merge(prop, cand, u)

    def merge(self, prop, subsumee, subsumer):
        """Redirect every incoming edge of the subsumee to the subsumer,
        delete the subsumee's outgoing edges (each child keeps a parallel
        reference from the subsumer), kill the subsumee."""
        m = prop.metrics
        m.t_merges += 1
        m.s_merges += 1
        e = subsumee.in_head
        while e is not None:
            nxt = e.in_next
            prop.move_edge_dest(e, subsumer)
            e = nxt
        e = subsumee.out_head
        while e is not None:
            nxt = e.out_next
            prop.kill_edge_noncascade(e)
            e = nxt
        prop.kill_node(subsumee)

    def _collapse_ok(self, prop, u, layer) -> bool:
        if len(u.child_count) != 1 or u.out_deg < 1:
            return False
        view = prop.view
        if u.out_deg != view.size(layer):
            return False
        e = u.out_head
        while e is not None:
            if e.label is WILD or not view.contains(layer, e.label):
                return False
            e = e.out_next
        return True

    def collapse(self, prop, u):
        """Full reduction rewrite: splice u out, lengthening every incoming
        edge down to u's single child (the spliced span stays supported by
        the fresh long-edge intervals, or by the root prefix when u was
        the root)."""
        mdd = prop.mdd
        child = mdd.nodes[next(iter(u.child_count))]
        m = prop.metrics
        m.t_collapses += 1
        m.s_collapses += 1
        if u is mdd.root:
            prop.set_root(child)
        else:
            e = u.in_head
            while e is not None:
                nxt = e.in_next
                prop.redirect_edge_deeper(e, child)
                e = nxt
        e = u.out_head
        while e is not None:
            nxt = e.out_next
            prop.kill_edge_noncascade(e)
            e = nxt
        prop.kill_node(u)
