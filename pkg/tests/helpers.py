"""Shared test machinery: random instances, oracles, logical snapshots."""

from __future__ import annotations

from itertools import product

from mddprop import (
    Mdd, TupleTable, build_from_tuples, expand_to_plain, canonical_form,
    make_store, MddPropagator, ScanPropagator, IntervalPropagator,
    enumerate_solutions,
)


def full_domains(n, d):
    return [list(range(1, d + 1)) for _ in range(n)]


def random_table(rng, n, d, max_rows=50):
    dom = full_domains(n, d)
    universe = list(product(*dom))
    k = rng.randint(1, min(max_rows, len(universe)))
    rows = rng.sample(universe, k)
    return TupleTable(range(1, n + 1), rows), dom


def random_instance(rng, *, nmax=6, dmax=4, max_rows=50):
    n = rng.randint(1, nmax)
    d = rng.randint(2, dmax)
    return random_table(rng, n, d, max_rows)


def oracle_domains(rows, store):
    """Valid sets per variable: projections of the rows consistent with
    the current domains (index 0 padding)."""
    n = store.n
    dom = [None] + [set(store.values(i)) for i in range(1, n + 1)]
    valid = [set() for _ in range(n + 1)]
    for r in rows:
        if all(r[i - 1] in dom[i] for i in range(1, n + 1)):
            for i in range(1, n + 1):
                valid[i].add(r[i - 1])
    return valid


def oracle_entailed(rows, store):
    prod = product(*[store.values(i) for i in range(1, store.n + 1)])
    rows = set(rows)
    return all(tuple(p) in rows for p in prod)


def current_domains(store):
    return [set(store.values(i)) for i in range(1, store.n + 1)]


def make_dynamic(table, dom, **kw):
    """Build + wire a dynamic propagator; returns (prop, store, trail, mdd)."""
    edge_mode = kw.pop("edge_mode", "long")
    mode = "uniqueness" if edge_mode == "plain" else "full"
    mdd = build_from_tuples(table, dom, mode=mode, edge_mode=edge_mode)
    store, trail = make_store(dom)
    prop = MddPropagator(mdd, store, **kw)
    return prop, store, trail, mdd


def logical_snapshot(p: MddPropagator) -> dict:
    """Full logical state of a dynamic propagator, order-insensitive."""
    mdd = p.mdd
    nodes = {}
    for u in mdd.nodes:
        if not u.alive:
            continue
        out = sorted((repr(e.label), e.dst.id, e.kind) for e in mdd.out_edges(u))
        inn = sorted((repr(e.label), e.src.id) for e in mdd.in_edges(u))
        nodes[u.id] = (u.layer, out, inn, u.out_deg, u.in_deg,
                       dict(u.child_count), u.sig, u.label_sig, u.is_wildcard)
    sup = {}
    for key in p.supports.heads:
        ids = sorted(e.id for e in p.supports.edges(*key))
        if ids:
            sup[key] = ids
    union_cover = {}
    for a, b, c in p.registry.union.segs:
        for x in range(a, b + 1):
            union_cover[x] = union_cover.get(x, 0) + c
    snap = {
        "nodes": nodes,
        "edges": {e.id: (e.src.id, e.dst.id, repr(e.label), e.kind)
                  for e in mdd.edges if e.alive},
        "root": mdd.root.id,
        "node_counts": list(mdd.live_node_count),
        "edge_count": mdd.live_edge_count,
        "leq_one": mdd.layers_leq_one,
        "multi_child": mdd.multi_child_count,
        "domains": [sorted(p.view.store.values(i))
                    for i in range(1, p.view.store.n + 1)],
        "supports": sup,
        "intervals": dict(p.registry.counters),
        "cover": list(p.registry.cover),
        "union": union_cover,
        "failed": p.failed,
    }
    if p.wilds is not None:
        snap["wild_counts"] = list(p.wilds.w)
        snap["wild_deferred"] = [sorted(b) for b in p.wilds.deferred]
    if p.reducer is not None:
        snap["table"] = {(sig, uid) for sig, bucket in p.reducer.table.items()
                         for uid in bucket}
        snap["sc_index"] = {(sig, uid) for sig, bucket in p.reducer.sc_index.items()
                            for uid in bucket}
        snap["table_sigs"] = {u.id: u.table_sig for u in mdd.nodes if u.alive}
    return snap


def interval_snapshot(p: IntervalPropagator) -> dict:
    dag = p.dag
    return {
        "nodes": {u.id: (u.layer, u.out_deg, u.in_deg)
                  for u in dag.nodes if u.alive},
        "edges": {e.id: (e.src.id, e.dst.id, e.lo, e.hi)
                  for e in dag.edges if e.alive},
        "edge_count": dag.live_edge_count,
        "infos": {(layer, lo, hi): (info.alive, info.valid_count,
                                    sorted(info.edges))
                  for layer in range(1, dag.n_vars + 1)
                  for (lo, hi), info in p.infos[layer].items()},
        "cover": [dict(c) for c in p.cover],
        "processed": sorted(p._processed),
        "domains": [sorted(p.view.store.values(i))
                    for i in range(1, p.view.store.n + 1)],
        "failed": p.failed,
    }


def live_mdd_solutions(mdd, store):
    return set(enumerate_solutions(mdd, store.identity_view()
                                   if hasattr(store, "identity_view") else store))


def assert_counters(mdd):
    from mddprop import validate
    rep = validate(mdd)
    assert rep.ok, str(rep)


def scripted_ops(rng, store, length):
    """A random script of remove/assign/backtrack ops over live values."""
    ops = []
    for _ in range(length):
        kind = rng.random()
        if kind < 0.5:
            ops.append("remove")
        elif kind < 0.8:
            ops.append("assign")
        else:
            ops.append("backtrack")
    return ops


def pick_removals(rng, store, k=2):
    pairs = []
    for _ in range(k):
        i = rng.randint(1, store.n)
        vals = store.values(i)
        if len(vals) > 1:
            pairs.append((i, rng.choice(sorted(vals))))
    return list(dict.fromkeys(pairs))
