"""Builders: tuple tables, conjoin, static reduction, generators."""

import random
from itertools import product

import pytest

from mddprop import (
    EmptyConstraint, TupleTable, UndirectedGraph, WILD,
    at_least_once_mdd, build_alldifferent_mdd, build_from_tuples,
    canonical_form, chain_leq_mdd, conjoin, embed_scope, expand_to_plain,
    live_counts, n_walk_mdd, reduce_static, solutions_set, validate,
    make_store, enumerate_solutions,
)
from helpers import random_instance, full_domains

FIG1_ROWS = [(1, 3), (2, 1), (3, 3), (4, 1), (4, 2), (4, 3)]
FIG1_DOM = [[1, 2, 3, 4], [1, 2, 3]]


def test_build_fig1_fully_reduced_counts():
    m = build_from_tuples(TupleTable((1, 2), FIG1_ROWS), FIG1_DOM)
    per_layer, edges = live_counts(m)
    assert sum(per_layer) == 4 and edges == 6
    longs = [e for e in m.edges if e.alive and e.dst.layer > e.src.layer + 1]
    assert len(longs) == 1 and longs[0].label == 4


def test_build_constant_true_collapses_to_terminal():
    rows = list(product(*FIG1_DOM))
    m = build_from_tuples(TupleTable((1, 2), rows), FIG1_DOM)
    assert m.root is m.terminal
    assert live_counts(m) == ([0, 0, 1], 0)


def test_build_empty_table_raises():
    with pytest.raises(EmptyConstraint):
        build_from_tuples(TupleTable((1, 2), []), FIG1_DOM)


def test_build_rejects_out_of_domain_rows():
    with pytest.raises(ValueError):
        build_from_tuples(TupleTable((1, 2), [(9, 1)]), FIG1_DOM)


def test_canonicity_insertion_order_independent():
    rng = random.Random(11)
    for _ in range(25):
        table, dom = random_instance(rng)
        rows = sorted(table.rows)
        base = canonical_form(build_from_tuples(TupleTable(table.scope, rows), dom))
        for _ in range(4):
            rng.shuffle(rows)
            other = build_from_tuples(TupleTable(table.scope, rows), dom)
            assert canonical_form(other) == base


def test_reduce_static_fixpoint_and_semantics():
    rng = random.Random(23)
    for _ in range(25):
        table, dom = random_instance(rng)
        full = build_from_tuples(table, dom)
        again = reduce_static(full, dom)
        assert canonical_form(again) == canonical_form(full)
        plain = expand_to_plain(full, dom)
        assert solutions_set(plain, dom) == table.rows
        refull = reduce_static(plain, dom, mode="full")
        assert canonical_form(refull) == canonical_form(full)


def test_reduce_static_uniqueness_merges_equal_nodes():
    from mddprop import Mdd
    m = Mdd(2)
    t = m.new_node(3)
    a = m.new_node(2)
    b = m.new_node(2)
    r = m.new_node(1)
    m.root, m.terminal = r, t
    m.new_edge(a, 3, t)
    m.new_edge(b, 3, t)
    m.new_edge(r, 1, a)
    m.new_edge(r, 2, b)
    red = reduce_static(m, FIG1_DOM, mode="uniqueness")
    per_layer, edges = live_counts(red)
    assert per_layer == [1, 1, 1] and edges == 3


def test_conjoin_identity_idempotent_and_intersection():
    f = build_from_tuples(TupleTable((1, 2), FIG1_ROWS), FIG1_DOM)
    true_rows = list(product(*FIG1_DOM))
    top = build_from_tuples(TupleTable((1, 2), true_rows), FIG1_DOM)
    assert canonical_form(conjoin(f, top, FIG1_DOM)) == canonical_form(f)
    assert canonical_form(conjoin(f, f, FIG1_DOM)) == canonical_form(f)
    x2_is_3 = build_from_tuples(
        TupleTable((1, 2), [(a, 3) for a in FIG1_DOM[0]]), FIG1_DOM)
    got = solutions_set(conjoin(f, x2_is_3, FIG1_DOM), FIG1_DOM)
    assert got == {(1, 3), (3, 3), (4, 3)}


def test_conjoin_empty_intersection_raises():
    a = build_from_tuples(TupleTable((1, 2), [(1, 1)]), FIG1_DOM)
    b = build_from_tuples(TupleTable((1, 2), [(2, 2)]), FIG1_DOM)
    with pytest.raises(EmptyConstraint):
        conjoin(a, b, FIG1_DOM)


def test_conjoin_matches_set_intersection_random():
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randint(1, 4)
        d = rng.randint(2, 4)
        ta, dom = random_instance(rng, nmax=n, dmax=d)
        n = len(ta.scope)
        tb, _ = random_instance(rng, nmax=n, dmax=d)
        while len(tb.scope) != n:
            tb, _ = random_instance(rng, nmax=n, dmax=d)
        dom = full_domains(n, d)
        rows_a = {r for r in ta.rows if all(v <= d for v in r)}
        rows_b = {r for r in tb.rows if all(v <= d for v in r)}
        want = rows_a & rows_b
        if not rows_a or not rows_b:
            continue
        a = build_from_tuples(TupleTable(range(1, n + 1), rows_a), dom)
        b = build_from_tuples(TupleTable(range(1, n + 1), rows_b), dom)
        if not want:
            with pytest.raises(EmptyConstraint):
                conjoin(a, b, dom)
        else:
            got = solutions_set(conjoin(a, b, dom), dom)
            assert got == want


def test_n_walk_path_graph():
    m = n_walk_mdd(UndirectedGraph.path(2))
    assert solutions_set(m, full_domains(2, 2)) == {(1, 2), (2, 1)}
    per_layer, _ = live_counts(m)
    assert sum(per_layer) == 4


def test_n_walk_c4_counts_and_bound():
    g = UndirectedGraph.cycle(4)
    m = n_walk_mdd(g)
    per_layer, edges = live_counts(m)
    assert sum(per_layer) <= 4 * 4 + 2
    assert edges <= 4 ** 3
    assert len(solutions_set(m, full_domains(4, 4))) == 32


def test_n_walk_single_vertex():
    m = n_walk_mdd(UndirectedGraph(1, []))
    assert solutions_set(m, [[1]]) == {(1,)}


def test_n_walk_edgeless_raises():
    with pytest.raises(EmptyConstraint):
        n_walk_mdd(UndirectedGraph(3, []))


def test_n_walk_bound_random_graphs():
    rng = random.Random(17)
    for _ in range(15):
        n = rng.randint(2, 8)
        edges = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)
                 if rng.random() < 0.5]
        g = UndirectedGraph(n, edges)
        try:
            m = n_walk_mdd(g)
        except EmptyConstraint:
            continue
        per_layer, ecount = live_counts(m)
        assert sum(per_layer) <= n * n + 2
        assert ecount <= n ** 3


def test_at_least_once_solution_counts():
    for n, d, v in [(1, 2, 1), (3, 2, 1), (4, 3, 2)]:
        expect = d ** n - (d - 1) ** n
        for allow in (True, False):
            m = at_least_once_mdd(n, d, v, allow)
            assert len(solutions_set(m, full_domains(n, d))) == expect


def test_at_least_once_long_variant_strictly_smaller():
    for n in (4, 8, 16, 32):
        a_nodes, a_edges = live_counts(at_least_once_mdd(n, 2, 1, True))
        b_nodes, b_edges = live_counts(at_least_once_mdd(n, 2, 1, False))
        assert sum(a_nodes) < sum(b_nodes)
        assert a_edges < b_edges


def test_chain_leq_small_enumeration():
    m = chain_leq_mdd(2, 2)
    assert solutions_set(m, full_domains(2, 2)) == {(1, 1), (1, 2), (2, 2)}


def test_chain_leq_uniqueness_fixture_shape():
    m = chain_leq_mdd(4, 3, mode="uniqueness")
    per_layer, _ = live_counts(m)
    assert per_layer == [1, 3, 3, 3, 1]  # root + 9 chain nodes + terminal
    brute = {(v, a, b, c)
             for v in (1, 2, 3) for a in (1, 2, 3)
             for b in (1, 2, 3) for c in (1, 2, 3)
             if v <= a and v <= b and v <= c}
    assert solutions_set(m, full_domains(4, 3)) == brute
    assert solutions_set(chain_leq_mdd(4, 3), full_domains(4, 3)) == brute


def test_alldifferent_mdd():
    dom = full_domains(3, 3)
    m = build_alldifferent_mdd(3, dom)
    sols = solutions_set(m, dom)
    assert len(sols) == 6
    assert all(len(set(s)) == 3 for s in sols)


def test_embed_scope_lifts_with_long_edges():
    table = TupleTable((1, 2), [(1, 2), (2, 1)])
    dom2 = full_domains(2, 2)
    m = build_from_tuples(table, dom2)
    dom4 = full_domains(4, 2)
    lifted = embed_scope(m, (2, 4), 4, dom4)
    store, _ = make_store(dom4)
    sols = set(enumerate_solutions(lifted, store))
    want = {(a, x, b, y) for a in (1, 2) for b in (1, 2)
            for (x, y) in [(1, 2), (2, 1)]}
    assert sols == want
    assert validate(lifted).ok


def test_wildcard_build_round_trip():
    table = TupleTable((1, 2), FIG1_ROWS)
    m = build_from_tuples(table, FIG1_DOM, edge_mode="wildcard")
    assert validate(m).ok
    assert any(u.is_wildcard for u in m.nodes if u.alive)
    assert solutions_set(m, FIG1_DOM) == set(FIG1_ROWS)
    # converting styles preserves semantics and canonicity
    as_long = reduce_static(m, FIG1_DOM, mode="full", edge_mode="long")
    base = build_from_tuples(table, FIG1_DOM)
    assert canonical_form(as_long) == canonical_form(base)
