"""Full-scan propagator: pseudo-code semantics, traversal accounting,
delta-cutoff soundness, no-good recording."""

import random

from mddprop import (
    TupleTable, build_from_tuples, expand_to_plain, clone_live,
    make_store, MddPropagator, ScanPropagator, NoGoodStore, shape_id,
)
from helpers import (
    random_instance, oracle_domains, current_domains, pick_removals,
)

FIG1_ROWS = [(1, 3), (2, 1), (3, 3), (4, 1), (4, 2), (4, 3)]
FIG1_DOM = [[1, 2, 3, 4], [1, 2, 3]]


def _fig1_scan(**kw):
    mdd = expand_to_plain(
        build_from_tuples(TupleTable((1, 2), FIG1_ROWS), FIG1_DOM), FIG1_DOM)
    store, trail = make_store(FIG1_DOM)
    prop = ScanPropagator(mdd, store, **kw)
    assert prop.initialize() == []
    return prop, store, trail, mdd


def reachable_live_edges(mdd) -> int:
    fwd = set()
    stack = [mdd.root]
    fwd.add(mdd.root.id)
    while stack:
        u = stack.pop()
        for e in mdd.out_edges(u):
            if e.dst.id not in fwd:
                fwd.add(e.dst.id)
                stack.append(e.dst)
    bwd = {mdd.terminal.id}
    incoming = {}
    for e in mdd.edges:
        if e.alive:
            incoming.setdefault(e.dst.id, []).append(e)
    stack = [mdd.terminal]
    while stack:
        u = stack.pop()
        for e in incoming.get(u.id, ()):
            if e.src.id not in bwd:
                bwd.add(e.src.id)
                stack.append(e.src)
    return sum(1 for e in mdd.edges
               if e.alive and e.src.id in fwd and e.dst.id in bwd)


def test_scan_fig1_remove():
    prop, store, trail, mdd = _fig1_scan()
    trail.checkpoint()
    deltas = prop.remove([(2, 3)])
    assert sorted(deltas) == [(1, 1), (1, 3), (2, 3)]
    assert current_domains(store) == [{2, 4}, {1, 2}]
    trail.backtrack()
    assert current_domains(store) == [set(FIG1_DOM[0]), set(FIG1_DOM[1])]


def test_scan_noop_when_consistent():
    prop, store, trail, _ = _fig1_scan()
    assert prop.remove([]) == []


def test_scan_whole_domain_fails():
    prop, store, trail, _ = _fig1_scan()
    trail.checkpoint()
    assert prop.remove([(1, v) for v in (1, 2, 3, 4)]) is None
    trail.backtrack()


def test_scan_traversal_accounting_fig1():
    prop, store, trail, mdd = _fig1_scan()
    trail.checkpoint()
    prop.remove([(2, 3)])
    # all nine edges are accessible in this step and therefore traversed
    assert prop.metrics.s_scan_edges == 9
    live_after = reachable_live_edges(mdd)
    assert live_after == 5
    assert prop.metrics.s_scan_edges == live_after + prop.metrics.s_died_no_value
    trail.backtrack()


def test_scan_lemma1_accounting_random():
    rng = random.Random(321)
    checked = 0
    while checked < 120:
        table, dom = random_instance(rng)
        mdd = build_from_tuples(table, dom)
        store, trail = make_store(dom)
        prop = ScanPropagator(mdd, store)
        prop.initialize()
        for _ in range(6):
            pairs = pick_removals(rng, store, 1)
            if not pairs:
                break
            trail.checkpoint()
            res = prop.remove(pairs)
            if res is None:
                trail.backtrack()
                continue
            live_after = reachable_live_edges(mdd)
            assert prop.metrics.s_scan_edges <= live_after + prop.metrics.s_died_no_value
            checked += 1


def test_delta_cutoff_same_deltas():
    rng = random.Random(77)
    for _ in range(30):
        table, dom = random_instance(rng)
        base = build_from_tuples(table, dom)
        s1, t1 = make_store(dom)
        s2, t2 = make_store(dom)
        plain = ScanPropagator(clone_live(base), s1)
        cut = ScanPropagator(clone_live(base), s2, delta_cutoff=True)
        plain.initialize()
        cut.initialize()
        for _ in range(10):
            pairs = pick_removals(rng, s1, 1)
            if not pairs:
                break
            t1.checkpoint()
            t2.checkpoint()
            r1 = plain.remove(pairs)
            r2 = cut.remove(list(pairs))
            if r1 is None or r2 is None:
                assert r1 is None and r2 is None
                t1.backtrack()
                t2.backtrack()
                continue
            assert sorted(r1) == sorted(r2)
            assert current_domains(s1) == current_domains(s2)


def test_delta_cutoff_sound_across_backtracks():
    rng = random.Random(177)
    table, dom = random_instance(rng, nmax=5, dmax=3)
    rows = table.rows
    mdd = build_from_tuples(table, dom)
    store, trail = make_store(dom)
    prop = ScanPropagator(mdd, store, delta_cutoff=True)
    prop.initialize()
    depth = 0
    for _ in range(40):
        if depth and rng.random() < 0.4:
            trail.backtrack()
            depth -= 1
            continue
        pairs = pick_removals(rng, store, 1)
        if not pairs:
            break
        trail.checkpoint()
        depth += 1
        res = prop.remove(pairs)
        if res is None:
            trail.backtrack()
            depth -= 1
            continue
        want = oracle_domains(rows, store)
        got = [None] + current_domains(store)
        for i in range(1, store.n + 1):
            assert got[i] == want[i]


def test_scan_determinism():
    a1, s1, t1, _ = _fig1_scan()
    a2, s2, t2, _ = _fig1_scan()
    t1.checkpoint()
    t2.checkpoint()
    r1 = a1.remove([(2, 3)])
    r2 = a2.remove([(2, 3)])
    assert r1 == r2
    assert a1.metrics.s_scan_edges == a2.metrics.s_scan_edges


def test_nogood_record_then_check():
    store = NoGoodStore()
    sigma = [(1, 2), (2, 3)]
    assert not store.check("shape-a", sigma)
    store.record("shape-a", sigma)
    assert store.check("shape-a", sigma)
    assert not store.check("shape-a", [(1, 2), (2, 1)])
    assert not store.check("shape-b", sigma)


def test_nogood_shared_across_scopes_by_shape():
    table = TupleTable((1, 2), [(1, 1), (2, 2)])
    dom = [[1, 2], [1, 2]]
    m1 = build_from_tuples(table, dom)
    m2 = build_from_tuples(TupleTable((1, 2), [(1, 1), (2, 2)]), dom)
    assert shape_id(m1) == shape_id(m2)
    store = NoGoodStore()
    # recorded against scope (x1,x2); the same projection on (x3,x4)
    # hits because both use scope positions
    store.record(shape_id(m1), [(1, 1), (2, 2)])
    assert store.check(shape_id(m2), [(1, 1), (2, 2)])
