"""Layered multi-valued decision diagram core.

An MDD over n variables is a layered DAG.  Nodes sit on layers 1..n+1;
layer n+1 holds the single terminal.  Every edge leaving layer i carries a
value label for variable i.  An edge whose destination is more than one
layer below its source is a *long edge*: it implicitly allows every
current value of the skipped variables.  A *wildcard node* has a single
edge labelled WILD standing for every current value of its own layer.
Root-to-terminal paths encode the solutions; if the root sits below layer
1 the leading variables are implicitly unconstrained.

Nodes and edges are arena-allocated and tombstoned (never freed) so the
undo trail can revive them by pointer relinks and flag flips.
"""

from __future__ import annotations

WILD = None  # label of the single outgoing edge of a wildcard node

KIND_PLAIN = 0
KIND_LONG = 1
KIND_WILDCARD = 2

_KIND_NAMES = {KIND_PLAIN: "plain", KIND_LONG: "long", KIND_WILDCARD: "wildcard"}


class Node:
    __slots__ = (
        "id", "layer", "alive", "is_wildcard",
        "out_head", "in_head", "out_deg", "in_deg",
        "child_count",          # live-edge count per distinct child id
        "sig", "label_sig",     # incremental hash signatures (reduce engine)
        "table_sig",            # signature the node is filed under in the reduce table
        "sc_key",               # key in the single-child index, or None
        "dirty",
    )

    def __init__(self, nid: int, layer: int, wildcard: bool = False):
        self.id = nid
        self.layer = layer
        self.alive = True
        self.is_wildcard = wildcard
        self.out_head = None
        self.in_head = None
        self.out_deg = 0
        self.in_deg = 0
        self.child_count = {}
        self.sig = 0
        self.label_sig = 0
        self.table_sig = None
        self.sc_key = None
        self.dirty = False

    def __repr__(self):
        return f"Node({self.id}@L{self.layer}{'' if self.alive else ' dead'})"


class Edge:
    __slots__ = (
        "id", "src", "dst", "label", "kind", "alive",
        "out_prev", "out_next", "in_prev", "in_next",
        "sup_prev", "sup_next", "sup_key",
    )

    def __init__(self, eid: int, src: Node, dst: Node, label):
        self.id = eid
        self.src = src
        self.dst = dst
        self.label = label
        if label is WILD:
            self.kind = KIND_WILDCARD
        elif dst.layer > src.layer + 1:
            self.kind = KIND_LONG
        else:
            self.kind = KIND_PLAIN
        self.alive = True
        self.out_prev = None
        self.out_next = None
        self.in_prev = None
        self.in_next = None
        self.sup_prev = None
        self.sup_next = None
        self.sup_key = None

    def __repr__(self):
        lab = "*" if self.label is WILD else self.label
        return f"Edge({self.id}:{self.src.id}-{lab}->{self.dst.id})"


def label_key(label):
    """Sort key tolerating the WILD (None) label."""
    return (1, 0) if label is WILD else (0, label)


# Intrusive doubly-linked list plumbing.  unlink_* leaves the removed
# edge's own pointers untouched so relink_* can undo it; this is only
# valid when undos replay in exact LIFO order.

def link_out(e: Edge):
    u = e.src
    h = u.out_head
    e.out_prev = None
    e.out_next = h
    if h is not None:
        h.out_prev = e
    u.out_head = e
    u.out_deg += 1


def unlink_out(e: Edge):
    u = e.src
    p, nx = e.out_prev, e.out_next
    if p is None:
        u.out_head = nx
    else:
        p.out_next = nx
    if nx is not None:
        nx.out_prev = p
    u.out_deg -= 1


def relink_out(e: Edge):
    u = e.src
    p, nx = e.out_prev, e.out_next
    if p is None:
        u.out_head = e
    else:
        p.out_next = e
    if nx is not None:
        nx.out_prev = e
    u.out_deg += 1


def link_in(e: Edge):
    u = e.dst
    h = u.in_head
    e.in_prev = None
    e.in_next = h
    if h is not None:
        h.in_prev = e
    u.in_head = e
    u.in_deg += 1


def unlink_in(e: Edge):
    u = e.dst
    p, nx = e.in_prev, e.in_next
    if p is None:
        u.in_head = nx
    else:
        p.in_next = nx
    if nx is not None:
        nx.in_prev = p
    u.in_deg -= 1


def relink_in(e: Edge):
    u = e.dst
    p, nx = e.in_prev, e.in_next
    if p is None:
        u.in_head = e
    else:
        p.in_next = e
    if nx is not None:
        nx.in_prev = e
    u.in_deg += 1


class Mdd:
    """Arena of nodes and edges plus live-count bookkeeping.

    ``live_node_count[i]`` tracks live nodes per layer and
    ``layers_leq_one`` the number of layers holding at most one live node
    (the entailment counter).  Mutators outside this class must keep the
    counters honest; `validate` recounts everything from scratch.
    """

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.nodes: list[Node] = []
        self.edges: list[Edge] = []
        self.root: Node | None = None
        self.terminal: Node | None = None
        self.live_node_count = [0] * (n_vars + 2)  # layers 1..n+1
        self.live_edge_count = 0
        self.layers_leq_one = n_vars + 1
        # Live nodes with >= 2 distinct children.  Entailment needs the
        # live diagram to be a node path: <= 1 node per layer alone is
        # fooled by a long edge bypassing a layer that still has a node.
        self.multi_child_count = 0

    def new_node(self, layer: int, wildcard: bool = False) -> Node:
        u = Node(len(self.nodes), layer, wildcard)
        self.nodes.append(u)
        self.bump_layer(layer, 1)
        return u

    def new_edge(self, src: Node, label, dst: Node) -> Edge:
        if not src.layer < dst.layer:
            raise ValueError(f"edge must descend: {src.layer} -> {dst.layer}")
        e = Edge(len(self.edges), src, dst, label)
        self.edges.append(e)
        link_out(e)
        link_in(e)
        cc = src.child_count
        cc[dst.id] = cc.get(dst.id, 0) + 1
        if len(cc) == 2 and cc[dst.id] == 1:
            self.multi_child_count += 1
        self.live_edge_count += 1
        return e

    def bump_layer(self, layer: int, delta: int):
        c0 = self.live_node_count[layer]
        c1 = c0 + delta
        self.live_node_count[layer] = c1
        if c0 == 2 and c1 == 1:
            self.layers_leq_one += 1
        elif c0 == 1 and c1 == 2:
            self.layers_leq_one -= 1

    def out_edges(self, u: Node):
        e = u.out_head
        while e is not None:
            yield e
            e = e.out_next

    def in_edges(self, u: Node):
        e = u.in_head
        while e is not None:
            yield e
            e = e.in_next

    def live_nodes(self):
        return (u for u in self.nodes if u.alive)

    def live_edges(self):
        return (e for e in self.edges if e.alive)

    def sorted_out(self, u: Node):
        return sorted(self.out_edges(u), key=lambda e: label_key(e.label))


class StepMetrics:
    """Propagation counters: cumulative totals, per-step log, and
    path-local accounting (restored on backtrack via trail snapshots).

    Totals are monotone within a descent and only cleared by `reset`.
    ``edge_moves`` counts subsumption relocations per edge id; redirects
    performed by full reduction are tallied separately because a chain of
    node collapses can legally relocate one edge more than lg|V| times.
    """

    __slots__ = (
        "step_number", "log",
        "t_scan_edges", "t_remove_calls", "t_died_no_value",
        "t_died_no_reference", "t_merges", "t_collapses", "t_entailed_events",
        "s_scan_edges", "s_remove_calls", "s_died_no_value",
        "s_died_no_reference", "s_merges", "s_collapses",
        "edge_moves", "edge_moves_max", "t_redirects",
        "remove_calls_path", "direction_violations",
        "interval_decrements",
    )

    def __init__(self):
        self.reset()

    def reset(self):
        self.step_number = 0
        self.log = []
        self.t_scan_edges = 0
        self.t_remove_calls = 0
        self.t_died_no_value = 0
        self.t_died_no_reference = 0
        self.t_merges = 0
        self.t_collapses = 0
        self.t_entailed_events = 0
        self.t_redirects = 0
        self.edge_moves = {}
        self.edge_moves_max = 0
        self.remove_calls_path = 0
        self.direction_violations = 0
        self.interval_decrements = 0
        self._zero_step()

    def _zero_step(self):
        self.s_scan_edges = 0
        self.s_remove_calls = 0
        self.s_died_no_value = 0
        self.s_died_no_reference = 0
        self.s_merges = 0
        self.s_collapses = 0

    def start_step(self):
        self.step_number += 1
        self._zero_step()

    def end_step(self):
        self.log.append((
            self.step_number, self.s_scan_edges, self.s_remove_calls,
            self.s_died_no_value, self.s_died_no_reference,
            self.s_merges, self.s_collapses,
        ))

    def moved(self, edge_id: int):
        m = self.edge_moves.get(edge_id, 0) + 1
        self.edge_moves[edge_id] = m
        if m > self.edge_moves_max:
            self.edge_moves_max = m

    def unmoved(self, edge_id: int):
        self.edge_moves[edge_id] -= 1

    def max_path_moves(self) -> int:
        return max(self.edge_moves.values(), default=0)

    # Trail snapshot hooks: path-local counters rewind with the search.
    def path_snapshot(self):
        return self.remove_calls_path

    def path_restore(self, snap):
        self.remove_calls_path = snap


class ValidationReport:
    def __init__(self):
        self.violations: list[tuple[str, str]] = []

    def add(self, code: str, message: str):
        self.violations.append((code, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"{c}: {m}" for c, m in self.violations)


def validate(mdd: Mdd) -> ValidationReport:
    """Check the structural restrictions and counter coherence.

    Violations are reported, never raised.  Applies to the live part of
    the diagram; scan-mode propagation (which marks edges dead but leaves
    node flags untouched) produces intermediate states this is not meant
    for.
    """
    rep = ValidationReport()
    n = mdd.n_vars
    live = [u for u in mdd.nodes if u.alive]
    if not live:
        rep.add("empty", "no live nodes")
        return rep

    min_layer = min(u.layer for u in live)
    roots = [u for u in live if u.layer == min_layer]
    if len(roots) != 1:
        rep.add("root", f"{len(roots)} nodes on minimum layer {min_layer}")
    elif mdd.root is not roots[0]:
        rep.add("root", f"root field points at node {mdd.root.id if mdd.root else None}, "
                        f"minimum-layer node is {roots[0].id}")
    terms = [u for u in live if u.layer == n + 1]
    if len(terms) != 1:
        rep.add("terminal", f"{len(terms)} nodes on layer {n + 1}")
    elif mdd.terminal is not terms[0]:
        rep.add("terminal", f"terminal field mismatch on node {terms[0].id}")

    per_layer = [0] * (n + 2)
    for u in live:
        if not 1 <= u.layer <= n + 1:
            rep.add("layer-range", f"node {u.id} on layer {u.layer}")
            continue
        per_layer[u.layer] += 1
        labels = set()
        out_deg = 0
        cc = {}
        for e in mdd.out_edges(u):
            out_deg += 1
            if e.label in labels:
                rep.add("duplicate-label", f"node {u.id} has two edges labelled {e.label}")
            labels.add(e.label)
            cc[e.dst.id] = cc.get(e.dst.id, 0) + 1
            if not e.alive:
                rep.add("dead-linked", f"dead edge {e.id} linked in node {u.id} outgoing list")
            if e.src.layer >= e.dst.layer:
                rep.add("edge-direction", f"edge {e.id} goes {e.src.layer}->{e.dst.layer}")
            if not e.dst.alive:
                rep.add("dead-endpoint", f"live edge {e.id} enters dead node {e.dst.id}")
        if out_deg != u.out_deg:
            rep.add("counter", f"node {u.id} out_deg {u.out_deg} != recount {out_deg}")
        if cc != u.child_count:
            rep.add("counter", f"node {u.id} child_count {u.child_count} != recount {cc}")
        in_deg = sum(1 for _ in mdd.in_edges(u))
        if in_deg != u.in_deg:
            rep.add("counter", f"node {u.id} in_deg {u.in_deg} != recount {in_deg}")
        if u.layer <= n and out_deg == 0:
            rep.add("no-outgoing", f"non-terminal node {u.id} has no live outgoing edge")
        if u.layer == n + 1 and out_deg > 0:
            rep.add("terminal-outgoing", f"terminal node {u.id} has outgoing edges")
        if u.is_wildcard and (out_deg != 1 or WILD not in labels):
            rep.add("wildcard-shape", f"wildcard node {u.id} labels {labels}")
        if not u.is_wildcard and WILD in labels:
            rep.add("wildcard-shape", f"plain node {u.id} carries a WILD edge")

    edge_count = 0
    for e in mdd.edges:
        if not e.alive:
            continue
        edge_count += 1
        if not e.src.alive or not e.dst.alive:
            rep.add("dead-endpoint", f"live edge {e.id} has a dead endpoint")
    if edge_count != mdd.live_edge_count:
        rep.add("counter", f"live_edge_count {mdd.live_edge_count} != recount {edge_count}")
    for layer in range(1, n + 2):
        if per_layer[layer] != mdd.live_node_count[layer]:
            rep.add("counter", f"layer {layer} count {mdd.live_node_count[layer]} "
                               f"!= recount {per_layer[layer]}")
    leq = sum(1 for layer in range(1, n + 2) if per_layer[layer] <= 1)
    if leq != mdd.layers_leq_one:
        rep.add("counter", f"layers_leq_one {mdd.layers_leq_one} != recount {leq}")
    multi = sum(1 for u in live if len(u.child_count) >= 2)
    if multi != mdd.multi_child_count:
        rep.add("counter", f"multi_child_count {mdd.multi_child_count} != recount {multi}")
    return rep


def live_counts(mdd: Mdd):
    """Recount live nodes per layer (1..n+1) and live edges from flags."""
    per_layer = [0] * (mdd.n_vars + 1)
    for u in mdd.nodes:
        if u.alive:
            per_layer[u.layer - 1] += 1
    edges = sum(1 for e in mdd.edges if e.alive)
    return per_layer, edges


def enumerate_solutions(mdd: Mdd, dom):
    """Yield every full assignment accepted under the current domains.

    This is the brute-force oracle: a plain DFS over live edges, filtering
    labels against the current domains and expanding long edges, wildcard
    edges and the implicit root prefix over all current values of the
    skipped variables.  Assignments come out in ascending lexicographic
    order as tuples of length n.
    """
    n = mdd.n_vars
    root = mdd.root
    if root is None or not root.alive:
        return

    def rec(u, i, prefix):
        if i > n:
            yield tuple(prefix)
            return
        if u.layer > i:
            for v in sorted(dom.values(i)):
                prefix.append(v)
                yield from rec(u, i + 1, prefix)
                prefix.pop()
            return
        for e in mdd.sorted_out(u):
            if e.label is WILD:
                vals = sorted(dom.values(i))
            elif dom.contains(i, e.label):
                vals = (e.label,)
            else:
                continue
            for v in vals:
                prefix.append(v)
                yield from rec(e.dst, i + 1, prefix)
                prefix.pop()

    yield from rec(root, 1, [])


def solution_set(mdd: Mdd, dom) -> set:
    return set(enumerate_solutions(mdd, dom))


def save_text(mdd: Mdd) -> str:
    """Serialize the live part of the diagram.

    Format: header ``mdd <nVars> <nNodes> <nEdges>``, then one
    ``node <id> <layer>`` line per live node and one
    ``edge <src> <label> <dst>`` line per live edge.  Ids are dense and
    0-based, assigned in arena order, so save/load/save round-trips to
    identical bytes.  Long edges are implicit from the layer gap;
    wildcard edges carry the label ``*``.
    """
    live = [u for u in mdd.nodes if u.alive]
    remap = {u.id: k for k, u in enumerate(live)}
    lines = [f"mdd {mdd.n_vars} {len(live)} {mdd.live_edge_count}"]
    for k, u in enumerate(live):
        lines.append(f"node {k} {u.layer}")
    for e in mdd.edges:
        if e.alive:
            lab = "*" if e.label is WILD else e.label
            lines.append(f"edge {remap[e.src.id]} {lab} {remap[e.dst.id]}")
    return "\n".join(lines) + "\n"


def load_text(text: str) -> Mdd:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("mdd "):
        raise ValueError("missing mdd header")
    _, n_vars, n_nodes, n_edges = lines[0].split()
    n_vars, n_nodes, n_edges = int(n_vars), int(n_nodes), int(n_edges)
    mdd = Mdd(n_vars)
    wild_dsts = set()
    edge_specs = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "node":
            layer = int(parts[2])
            if int(parts[1]) != len(mdd.nodes):
                raise ValueError(f"node ids must be dense: {ln}")
            mdd.new_node(layer)
        elif parts[0] == "edge":
            src, lab, dst = int(parts[1]), parts[2], int(parts[3])
            label = WILD if lab == "*" else int(lab)
            edge_specs.append((src, label, dst))
            if label is WILD:
                wild_dsts.add(src)
        else:
            raise ValueError(f"unknown line: {ln}")
    if len(mdd.nodes) != n_nodes:
        raise ValueError("node count mismatch")
    for src, label, dst in edge_specs:
        mdd.new_edge(mdd.nodes[src], label, mdd.nodes[dst])
    if len(mdd.edges) != n_edges:
        raise ValueError("edge count mismatch")
    for nid in wild_dsts:
        mdd.nodes[nid].is_wildcard = True
    min_layer = min(u.layer for u in mdd.nodes)
    roots = [u for u in mdd.nodes if u.layer == min_layer]
    terms = [u for u in mdd.nodes if u.layer == n_vars + 1]
    if len(roots) != 1 or len(terms) != 1:
        raise ValueError("serialized MDD must have a unique root and terminal")
    mdd.root, mdd.terminal = roots[0], terms[0]
    return mdd


def clone_live(mdd: Mdd) -> Mdd:
    """Deep copy of the live part of a diagram (fresh dense arenas)."""
    live = [u for u in mdd.nodes if u.alive]
    out = Mdd(mdd.n_vars)
    remap = {}
    for u in live:
        remap[u.id] = out.new_node(u.layer, u.is_wildcard)
    for e in mdd.edges:
        if e.alive:
            out.new_edge(remap[e.src.id], e.label, remap[e.dst.id])
    out.root = remap[mdd.root.id]
    out.terminal = remap[mdd.terminal.id]
    return out
