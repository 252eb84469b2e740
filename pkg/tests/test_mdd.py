"""Core structure: validation, enumeration oracle, counts, serialization."""

import random

import pytest

from mddprop import (
    Mdd, TupleTable, WILD,
    build_from_tuples, expand_to_plain, clone_live, canonical_form,
    enumerate_solutions, live_counts, load_text, save_text, validate,
    make_store,
)
from helpers import random_instance, full_domains

FIG1_ROWS = [(1, 3), (2, 1), (3, 3), (4, 1), (4, 2), (4, 3)]
FIG1_DOM = [[1, 2, 3, 4], [1, 2, 3]]


def fig1_table():
    return TupleTable((1, 2), FIG1_ROWS)


def fig1_reduced():
    return build_from_tuples(fig1_table(), FIG1_DOM)


def fig1_expanded():
    return expand_to_plain(fig1_reduced(), FIG1_DOM)


def test_validate_fig1_clean():
    assert validate(fig1_reduced()).ok
    assert validate(fig1_expanded()).ok


def test_validate_terminal_only():
    m = Mdd(2)
    t = m.new_node(3)
    m.root = m.terminal = t
    assert validate(m).ok


def test_validate_reports_duplicate_labels():
    m = Mdd(1)
    t = m.new_node(2)
    r = m.new_node(1)
    m.root, m.terminal = r, t
    m.new_edge(r, 3, t)
    m.new_edge(r, 3, t)
    rep = validate(m)
    assert not rep.ok
    assert any(code == "duplicate-label" for code, _ in rep.violations)


def test_validate_reports_dangling_and_counters():
    m = Mdd(2)
    t = m.new_node(3)
    r = m.new_node(1)
    mid = m.new_node(2)
    m.root, m.terminal = r, t
    m.new_edge(r, 1, mid)
    # mid has no outgoing edge: violates the every-node-reaches-terminal shape
    rep = validate(m)
    assert any(code == "no-outgoing" for code, _ in rep.violations)


def test_enumerate_fig1_full_domains():
    store, _ = make_store(FIG1_DOM)
    assert sorted(enumerate_solutions(fig1_reduced(), store)) == sorted(FIG1_ROWS)


def test_enumerate_fig1_restricted():
    store, _ = make_store(FIG1_DOM)
    store.remove(2, 1)
    store.remove(2, 2)
    sols = set(enumerate_solutions(fig1_reduced(), store))
    assert sols == {(1, 3), (3, 3), (4, 3)}


def test_enumerate_terminal_only_constant_true():
    m = Mdd(2)
    t = m.new_node(3)
    m.root = m.terminal = t
    store, _ = make_store([[1, 2], [1, 2]])
    assert set(enumerate_solutions(m, store)) == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_enumerate_oracle_equals_rows_random():
    rng = random.Random(7)
    for _ in range(60):
        table, dom = random_instance(rng)
        m = build_from_tuples(table, dom)
        store, _ = make_store(dom)
        assert set(enumerate_solutions(m, store)) == table.rows


def test_live_counts_fig1():
    per_layer, edges = live_counts(fig1_expanded())
    assert per_layer == [1, 3, 1]
    assert edges == 9  # 4 root edges + 1 + 1 + 3 on layer 2
    per_layer, edges = live_counts(fig1_reduced())
    assert per_layer == [1, 2, 1]
    assert edges == 6


def test_live_counts_all_dead():
    m = fig1_expanded()
    for u in m.nodes:
        u.alive = False
    for e in m.edges:
        e.alive = False
    per_layer, edges = live_counts(m)
    assert per_layer == [0, 0, 0] and edges == 0


def test_serialization_round_trip_bit_exact():
    m = fig1_reduced()
    text = save_text(m)
    again = save_text(load_text(text))
    assert text == again
    assert canonical_form(load_text(text)) == canonical_form(m)


def test_serialization_long_edges_implicit():
    text = save_text(fig1_reduced())
    lines = text.splitlines()
    assert lines[0] == "mdd 2 4 6"
    # the long edge appears as a plain line whose endpoints differ by 2 layers
    assert "edge 3 4 0" in lines


def test_serialization_wildcard_label():
    m = Mdd(2)
    t = m.new_node(3)
    w = m.new_node(2, wildcard=True)
    r = m.new_node(1)
    m.root, m.terminal = r, t
    m.new_edge(r, 1, w)
    m.new_edge(w, WILD, t)
    text = save_text(m)
    assert "edge 1 * 0" in text
    back = load_text(text)
    assert validate(back).ok
    assert any(u.is_wildcard for u in back.nodes)


def test_clone_live_is_isomorphic():
    rng = random.Random(13)
    for _ in range(20):
        table, dom = random_instance(rng)
        m = build_from_tuples(table, dom)
        assert canonical_form(clone_live(m)) == canonical_form(m)


def test_counter_coherence_after_random_builds():
    rng = random.Random(5)
    for _ in range(30):
        table, dom = random_instance(rng)
        for mode in ("plain", "long"):
            m = build_from_tuples(table, dom, edge_mode=mode,
                                  mode="uniqueness" if mode == "plain" else "full")
            assert validate(m).ok
