"""Command-line front end: build, solve, repl.

Exit codes: 0 success (including UNSAT), 2 parse/usage error,
3 empty constraint, 4 node-limit breach.
"""

from __future__ import annotations

import argparse
import sys

from .build import (
    EmptyConstraint, NodeLimitExceeded, TupleTable,
    build_from_tuples, build_alldifferent_mdd, conjoin, embed_scope,
)
from .dynamic import MddPropagator
from .interval import IntervalPropagator, build_interval_dag, expand_to_mdd
from .mdd import Mdd, WILD, save_text, load_text
from .problem import ParseError, ProblemSpec, parse_problem_text
from .scan import ScanPropagator
from .search import (
    AllDifferentPropagator, Constraint, SearchProblem,
    initialize_problem, propagate_fixpoint, solve,
)
from .state import BRANCH_CAUSE, DomainStore, DomainView, Trail


class UsageError(Exception):
    pass


def mdd_counts(mdd: Mdd):
    nodes = sum(1 for u in mdd.nodes if u.alive)
    edges = longs = 0
    for e in mdd.edges:
        if e.alive:
            edges += 1
            if e.dst.layer > e.src.layer + 1:
                longs += 1
    return nodes, edges, longs


def _count_line(mdd: Mdd) -> str:
    nodes, edges, longs = mdd_counts(mdd)
    return f"nodes={nodes} edges={edges} longEdges={longs}"


def _load_spec(path: str) -> ProblemSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_text(fh.read())


def _scope_indices(spec: ProblemSpec, cons) -> list[int]:
    idx = [spec.var_index(name) for name in cons.scope]
    if idx != sorted(idx):
        raise UsageError(f"line {cons.line}: scope must follow the declared "
                         f"variable order")
    return idx


def _constraint_mdd(spec: ProblemSpec, cons, edge_mode: str, max_nodes):
    """MDD of one constraint over its own scope."""
    scope_domains = [spec.domain_of(name) for name in cons.scope]
    if cons.kind == "tuples":
        table = TupleTable(range(1, len(cons.scope) + 1), cons.rows)
        mode = "full" if edge_mode != "plain" else "uniqueness"
        return build_from_tuples(table, scope_domains, mode=mode,
                                 edge_mode=edge_mode, max_nodes=max_nodes)
    if cons.kind == "interval-tuples":
        dag = build_interval_dag(cons.rows, len(cons.scope))
        return expand_to_mdd(dag, scope_domains)
    if cons.kind == "mdd-ref":
        with open(cons.path, "r", encoding="utf-8") as fh:
            mdd = load_text(fh.read())
        if mdd.n_vars != len(cons.scope):
            raise UsageError(f"line {cons.line}: {cons.path} has {mdd.n_vars} "
                             f"variables, scope has {len(cons.scope)}")
        return mdd
    if cons.kind == "alldifferent":
        return build_alldifferent_mdd(len(cons.scope), scope_domains,
                                      max_nodes=max_nodes)
    raise UsageError(f"unknown kind {cons.kind}")


def cmd_build(args) -> int:
    spec = _load_spec(args.problem)
    if not spec.constraints:
        raise UsageError("nothing to build: no constraints")
    n = len(spec.variables)
    all_domains = [vals for _, vals in spec.variables]
    combined = None
    for k, cons in enumerate(spec.constraints):
        mdd = _constraint_mdd(spec, cons, args.edges, args.max_nodes)
        print(f"stage=constraint index={k} kind={cons.kind} {_count_line(mdd)}")
        lifted = embed_scope(mdd, _scope_indices(spec, cons), n, all_domains,
                             max_nodes=args.max_nodes)
        if combined is None:
            combined = lifted
        else:
            combined = conjoin(combined, lifted, all_domains,
                               max_nodes=args.max_nodes)
            print(f"stage=conjoin index={k} {_count_line(combined)}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(save_text(combined))
    print(_count_line(combined))
    return 0


def _make_problem(spec: ProblemSpec, args):
    if args.propagator == "scan" and args.reduce != "off":
        raise UsageError("--propagator scan supports --reduce off only "
                         "(reduction rides the dynamic propagator)")
    if args.edges == "wildcard" and args.reduce == "full":
        raise UsageError("--reduce full operates on long-edge diagrams; "
                         "use --edges long")
    trail = Trail()
    store = DomainStore([vals for _, vals in spec.variables], trail)
    constraints = []
    for cons in spec.constraints:
        scope = _scope_indices(spec, cons)
        view = DomainView(store, scope)
        if cons.kind == "alldifferent":
            prop = AllDifferentPropagator(view)
        else:
            prop = _mdd_propagator(spec, cons, view, args)
        constraints.append(Constraint(prop, scope, name=f"{cons.kind}@{cons.line}"))
    return SearchProblem(store, constraints)


def _mdd_propagator(spec: ProblemSpec, cons, view, args):
    scope_domains = [spec.domain_of(name) for name in cons.scope]
    if args.propagator == "interval":
        if cons.kind == "tuples":
            rows = [tuple((v, v) for v in r) for r in cons.rows]
            dag = build_interval_dag(rows, len(cons.scope))
        elif cons.kind == "interval-tuples":
            dag = build_interval_dag(cons.rows, len(cons.scope))
        else:
            raise UsageError(f"line {cons.line}: --propagator interval handles "
                             f"tuples and interval-tuples constraints only")
        return IntervalPropagator(dag, view)
    mdd = _constraint_mdd(spec, cons, args.edges, args.max_nodes)
    if args.propagator == "scan":
        return ScanPropagator(mdd, view, delta_cutoff=args.delta_cutoff)
    return MddPropagator(mdd, view, reduce_mode=args.reduce, hash_seed=args.seed)


def _stats_lines(problem) -> list[str]:
    agg = {
        "edgesTraversedScan": 0, "removeEdgeCalls": 0,
        "edgesDiedNoValue": 0, "edgesDiedNoReference": 0,
        "nodesMerged": 0, "nodesCollapsed": 0, "edgeRedirects": 0,
        "edgeMovesMax": 0, "entailedEvents": 0, "intervalDecrements": 0,
    }
    steps = 0
    for c in problem.constraints:
        m = getattr(c.prop, "metrics", None)
        if m is None:
            continue
        steps += m.step_number
        agg["edgesTraversedScan"] += m.t_scan_edges
        agg["removeEdgeCalls"] += m.t_remove_calls
        agg["edgesDiedNoValue"] += m.t_died_no_value
        agg["edgesDiedNoReference"] += m.t_died_no_reference
        agg["nodesMerged"] += m.t_merges
        agg["nodesCollapsed"] += m.t_collapses
        agg["edgeRedirects"] += m.t_redirects
        agg["edgeMovesMax"] = max(agg["edgeMovesMax"], m.edge_moves_max)
        agg["entailedEvents"] += m.t_entailed_events
        agg["intervalDecrements"] += m.interval_decrements
    lines = [f"steps={steps}"]
    lines.extend(f"{k}={v}" for k, v in agg.items())
    return lines


def cmd_solve(args) -> int:
    spec = _load_spec(args.problem)
    problem = _make_problem(spec, args)
    mode = "count"
    if args.all:
        mode = "all"
    elif args.first:
        mode = "first"
    result = solve(problem, mode)
    if result.solutions is not None:
        for sol in result.solutions:
            print("solution " + " ".join(str(v) for v in sol))
    print(f"solutions={result.count}")
    if result.count == 0:
        print("UNSAT")
    if args.stats:
        print(f"phases={len(result.phases)}")
        for line in _stats_lines(problem):
            print(line)
    return 0


def cmd_repl(args) -> int:
    spec = _load_spec(args.problem)
    problem = _make_problem(spec, args)
    names = spec.names
    store = problem.store

    def show():
        for i, name in enumerate(names, start=1):
            vals = ",".join(str(v) for v in sorted(store.values(i)))
            print(f"{name} in {{{vals}}}")
        for ci, c in enumerate(problem.constraints):
            if problem.entailed_at[ci] is not None:
                print(f"constraint {ci} entailed")

    if not initialize_problem(problem):
        print("UNSAT")
        return 0
    show()
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        toks = line.split()
        if not toks:
            continue
        cmd = toks[0]
        if cmd == "quit":
            break
        if cmd == "domains":
            show()
            continue
        if cmd == "entailed":
            flags = ["1" if problem.entailed_at[ci] is not None else "0"
                     for ci in range(len(problem.constraints))]
            print("entailed " + " ".join(flags))
            continue
        if cmd == "undo":
            if problem.trail.depth() == 0:
                print("nothing to undo")
            else:
                problem.backtrack()
                show()
            continue
        if cmd in ("assign", "remove"):
            if len(toks) != 3:
                print(f"usage: {cmd} <variable> <value>")
                continue
            name, val_s = toks[1], toks[2]
            if name not in names:
                print(f"unknown variable {name}")
                continue
            try:
                val = int(val_s)
            except ValueError:
                print(f"value {val_s} is not an integer")
                continue
            var = names.index(name) + 1
            if not store.contains(var, val):
                print(f"value {val} not in domain of {name}")
                continue
            if cmd == "remove" and store.size(var) == 1:
                print(f"cannot remove the last value of {name}")
                continue
            problem.checkpoint()
            store.active_cause = BRANCH_CAUSE
            if cmd == "assign":
                removals = [w for w in sorted(store.values(var)) if w != val]
            else:
                removals = [val]
            for w in removals:
                store.remove(var, w)
            if propagate_fixpoint(problem) is None:
                print("contradiction; undone")
                problem.backtrack()
            else:
                show()
            continue
        print(f"unknown command {cmd}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mddprop",
                                description="MDD constraint engine")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="compile constraints into one MDD file")
    b.add_argument("problem")
    b.add_argument("-o", "--out", required=True)
    b.add_argument("--edges", choices=("plain", "long", "wildcard"), default="long")
    b.add_argument("--max-nodes", type=int, default=None)
    b.set_defaults(func=cmd_build)

    def solve_flags(sp):
        sp.add_argument("--propagator", choices=("scan", "dynamic", "interval"),
                        default="dynamic")
        sp.add_argument("--reduce", choices=("off", "uniqueness", "full"),
                        default="off")
        sp.add_argument("--edges", choices=("plain", "long", "wildcard"),
                        default="long")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--delta-cutoff", action="store_true")
        sp.add_argument("--max-nodes", type=int, default=None)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("problem")
    solve_flags(s)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--count", action="store_true", default=True)
    g.add_argument("--all", action="store_true")
    g.add_argument("--first", action="store_true")
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("repl", help="interactive domain exploration")
    r.add_argument("problem")
    solve_flags(r)
    r.set_defaults(func=cmd_repl)
    return p


def main(argv=None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptyConstraint as exc:
        print(f"empty constraint: {exc}", file=sys.stderr)
        return 3
    except NodeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
