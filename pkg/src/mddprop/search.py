"""Backtracking search driving any mix of propagators to fixpoint.

One phase = one branching decision plus propagation to quiescence; one
step = one propagator invocation.  The domain store's removal log is the
message bus: every constraint keeps a cursor into it and is fed the
entries caused by branching or by other constraints, until a full round
adds nothing.  Domain-entailed constraints are skipped until the search
backtracks past the phase that entailed them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .state import DomainStore, DomainView, Trail, BRANCH_CAUSE


class Constraint:
    """Binds a propagator to a scope of problem variables.

    The propagator addresses its variables as 1..k; this wrapper
    projects problem-level (variable, value) pairs into scope positions.
    """

    def __init__(self, propagator, scope, name: str = ""):
        self.prop = propagator
        self.scope = tuple(scope)
        self.scope_set = frozenset(scope)
        self.pos = {var: k + 1 for k, var in enumerate(self.scope)}
        self.name = name or f"constraint({','.join(map(str, scope))})"

    def initialize(self):
        return self.prop.initialize()

    def feed(self, internal_pairs):
        return self.prop.remove(internal_pairs)

    def is_entailed(self) -> bool:
        return self.prop.is_entailed()


class AllDifferentPropagator:
    """Naive value elimination over its scope: an assigned value leaves
    every other domain, repeated to the constraint's own fixpoint.  Not
    GAC; search resolves the slack."""

    def __init__(self, domains):
        if isinstance(domains, DomainStore):
            domains = domains.identity_view()
        self.view = domains
        self.initialized = False

    def initialize(self):
        self.initialized = True
        return self.remove([])

    def is_entailed(self) -> bool:
        return False

    def remove(self, pairs):
        view = self.view
        store = view.store
        mark = len(store.removal_log)
        n = view.n
        changed = True
        while changed:
            changed = False
            for i in range(1, n + 1):
                if view.size(i) != 1:
                    continue
                v = view.values(i)[0]
                for j in range(1, n + 1):
                    if j != i and view.contains(j, v):
                        view.remove(j, v)
                        changed = True
                        if view.size(j) == 0:
                            return None
        return [(a, b) for a, b, _ in store.removal_log[mark:]]


@dataclass
class PhaseRecord:
    phase: int
    variable: int
    value: object
    steps: int
    failed: bool


@dataclass
class SolveResult:
    count: int = 0
    solutions: list | None = None
    phases: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    root_failed: bool = False


class SearchProblem:
    """Variables with shared domains plus a constraint list over them."""

    def __init__(self, store: DomainStore, constraints):
        self.store = store
        self.trail = store.trail
        self.constraints = list(constraints)
        self.cursors = [0] * len(self.constraints)
        self.entailed_at = [None] * len(self.constraints)
        self.failed_constraint = None

    @property
    def n(self) -> int:
        return self.store.n

    def checkpoint(self):
        self.trail.checkpoint()

    def backtrack(self):
        self.trail.backtrack()
        log_len = len(self.store.removal_log)
        depth = self.trail.depth()
        for ci in range(len(self.constraints)):
            if self.cursors[ci] > log_len:
                self.cursors[ci] = log_len
            if self.entailed_at[ci] is not None and self.entailed_at[ci] > depth:
                self.entailed_at[ci] = None


def initialize_problem(problem: SearchProblem) -> bool:
    """Run every constraint's initializer, then the first fixpoint.
    False means the problem is unsatisfiable at the root."""
    store = problem.store
    for ci, c in enumerate(problem.constraints):
        store.active_cause = ci
        res = c.initialize()
        store.active_cause = BRANCH_CAUSE
        if res is None:
            problem.failed_constraint = ci
            return False
        _note_entailment(problem, ci, c)
    return propagate_fixpoint(problem) is not None


def _note_entailment(problem, ci, c):
    if problem.entailed_at[ci] is None and c.is_entailed():
        problem.entailed_at[ci] = problem.trail.depth()
        m = getattr(c.prop, "metrics", None)
        if m is not None:
            m.t_entailed_events += 1


def propagate_fixpoint(problem: SearchProblem, trigger=None):
    """Feed logged removals round-robin until no constraint can add any.

    `trigger` pairs, if given, are applied to the store first.  Returns
    the number of propagator steps executed, or None on failure (the
    failing constraint index lands in problem.failed_constraint).
    """
    store = problem.store
    log = store.removal_log
    if trigger:
        for var, val in trigger:
            if store.contains(var, val):
                store.remove(var, val)
                if store.size(var) == 0:
                    problem.failed_constraint = -1
                    return None
    cs = problem.constraints
    cursors = problem.cursors
    steps = 0
    while True:
        progressed = False
        for ci, c in enumerate(cs):
            if problem.entailed_at[ci] is not None:
                cursors[ci] = len(log)
                continue
            start = cursors[ci]
            if start >= len(log):
                continue
            pend = [(var, val) for var, val, cause in log[start:]
                    if cause != ci and var in c.scope_set]
            cursors[ci] = len(log)
            if not pend:
                continue
            pos = c.pos
            internal = [(pos[var], val) for var, val in pend]
            steps += 1
            store.active_cause = ci
            res = c.feed(internal)
            store.active_cause = BRANCH_CAUSE
            cursors[ci] = len(log)
            if res is None:
                problem.failed_constraint = ci
                return None
            _note_entailment(problem, ci, c)
            progressed = True
        if not progressed:
            return steps


def solve(problem: SearchProblem, mode: str = "count", *,
          select_variable=None, order_values=None,
          record_trace: bool = False) -> SolveResult:
    """Depth-first search: checkpoint, branch, propagate, recurse,
    backtrack.  mode is "count", "all" (collect solutions) or "first".

    Branching defaults to lexicographic variable order with ascending
    values; both are pluggable.  Deterministic for fixed policies and
    hash seeds.
    """
    if mode not in ("count", "all", "first"):
        raise ValueError(f"bad mode {mode!r}")
    store = problem.store
    n = problem.n
    result = SolveResult(solutions=[] if mode != "count" else None)
    if select_variable is None:
        def select_variable(p):
            for i in range(1, n + 1):
                if p.store.size(i) > 1:
                    return i
            return None
    if order_values is None:
        def order_values(p, var):
            return sorted(p.store.values(var))

    if not initialize_problem(problem):
        result.root_failed = True
        if record_trace:
            result.trace.append(("root-fail",))
        return result

    phase_counter = [0]

    def descend() -> bool:
        var = select_variable(problem)
        if var is None:
            result.count += 1
            if result.solutions is not None:
                result.solutions.append(tuple(store.values(i)[0] for i in range(1, n + 1)))
            if record_trace:
                result.trace.append(("solution",))
            return mode == "first"
        for v in order_values(problem, var):
            problem.checkpoint()
            phase_counter[0] += 1
            phase = phase_counter[0]
            if record_trace:
                result.trace.append(("branch", var, v))
            store.active_cause = BRANCH_CAUSE
            for w in sorted(store.values(var)):
                if w != v:
                    store.remove(var, w)
            steps = propagate_fixpoint(problem)
            failed = steps is None
            result.phases.append(PhaseRecord(phase, var, v, steps or 0, failed))
            stop = False
            if failed:
                if record_trace:
                    result.trace.append(("fail",))
            else:
                stop = descend()
            problem.backtrack()
            if stop:
                return True
        return False

    descend()
    return result


def oracle_valid_domains(solutions, domains, n: int | None = None) -> list:
    """Per-variable valid sets: project the solutions consistent with the
    current domains.  Index 0 of the result is padding."""
    if hasattr(domains, "as_sets"):
        dom = [None] + domains.as_sets()
    else:
        dom = [None] + [set(d) for d in domains]
    if n is None:
        n = len(dom) - 1
    valid = [set() for _ in range(n + 1)]
    for sol in solutions:
        ok = True
        for i in range(1, n + 1):
            if sol[i - 1] not in dom[i]:
                ok = False
                break
        if ok:
            for i in range(1, n + 1):
                valid[i].add(sol[i - 1])
    return valid
