"""Reversible search state: undo trail with checkpoints and sparse-set domains.

Every reversible mutation anywhere in the engine appends one entry
``(undo_fn, *args)`` to the shared trail; `Trail.backtrack` pops entries
back to the last checkpoint and calls them in LIFO order, which restores
the exact logical state (intrusive-list relinks rely on that order).
"""

from __future__ import annotations

BRANCH_CAUSE = -1


class Trail:
    __slots__ = ("ops", "checkpoints", "backtracks", "_metrics")

    def __init__(self):
        self.ops = []            # entries: (undo_callable, *args)
        self.checkpoints = []    # (ops length, metric snapshots)
        self.backtracks = 0
        self._metrics = []

    def attach_metrics(self, m):
        self._metrics.append(m)

    def push(self, *entry):
        self.ops.append(entry)

    def checkpoint(self) -> int:
        self.checkpoints.append((len(self.ops), [m.path_snapshot() for m in self._metrics]))
        return len(self.checkpoints)

    def depth(self) -> int:
        return len(self.checkpoints)

    def backtrack(self):
        if not self.checkpoints:
            raise RuntimeError("backtrack with no open checkpoint")
        mark, snaps = self.checkpoints.pop()
        ops = self.ops
        while len(ops) > mark:
            rec = ops.pop()
            rec[0](*rec[1:])
        for m, s in zip(self._metrics, snaps):
            m.path_restore(s)
        self.backtracks += 1


class _SparseSet:
    """Value array + position index + size; removal swaps to the tail.

    Restores are size bumps only, valid because the trail undoes removals
    in exact LIFO order (the swapped layout is then the removal-time one).
    """

    __slots__ = ("values", "pos", "size")

    def __init__(self, values):
        self.values = list(dict.fromkeys(values))
        self.pos = {v: k for k, v in enumerate(self.values)}
        self.size = len(self.values)

    def __contains__(self, v):
        p = self.pos.get(v)
        return p is not None and p < self.size

    def remove(self, v):
        p = self.pos[v]
        last = self.size - 1
        w = self.values[last]
        self.values[p], self.values[last] = w, self.values[p]
        self.pos[w], self.pos[v] = p, last
        self.size = last


class DomainStore:
    """Original and current domains for variables 1..n.

    ``removal_log`` records every (variable, value, cause) removal in
    order; the search harness distributes log suffixes to constraints, so
    propagators never need to be told twice about the same loss.
    """

    def __init__(self, domains, trail: Trail):
        # domains: iterable of value-iterables, one per variable (1-based var i
        # takes domains[i-1]).
        self.trail = trail
        self._sets = [None] + [_SparseSet(d) for d in domains]
        self.n = len(self._sets) - 1
        for i in range(1, self.n + 1):
            if self._sets[i].size == 0:
                raise ValueError(f"variable {i} has an empty original domain")
        self.removal_log: list[tuple[int, int, int]] = []
        self.active_cause = BRANCH_CAUSE

    def contains(self, i: int, v) -> bool:
        return v in self._sets[i]

    def size(self, i: int) -> int:
        return self._sets[i].size

    def values(self, i: int) -> list:
        s = self._sets[i]
        return s.values[: s.size]

    def original_values(self, i: int) -> list:
        return list(self._sets[i].values)

    def remove(self, i: int, v):
        self._sets[i].remove(v)
        self.removal_log.append((i, v, self.active_cause))
        self.trail.ops.append((self._undo_remove, i))

    def _undo_remove(self, i: int):
        self._sets[i].size += 1
        self.removal_log.pop()

    def as_sets(self) -> list[set]:
        return [set(self.values(i)) for i in range(1, self.n + 1)]

    def identity_view(self) -> "DomainView":
        return DomainView(self, tuple(range(1, self.n + 1)))


class DomainView:
    """Scope-translated window onto a DomainStore.

    A propagator built over scope (x3, x1) addresses its variables as
    1..k; the view maps those to store indices.
    """

    __slots__ = ("store", "scope")

    def __init__(self, store: DomainStore, scope):
        self.store = store
        self.scope = tuple(scope)

    @property
    def n(self) -> int:
        return len(self.scope)

    def contains(self, i: int, v) -> bool:
        return self.store.contains(self.scope[i - 1], v)

    def size(self, i: int) -> int:
        return self.store.size(self.scope[i - 1])

    def values(self, i: int) -> list:
        return self.store.values(self.scope[i - 1])

    def original_values(self, i: int) -> list:
        return self.store.original_values(self.scope[i - 1])

    def remove(self, i: int, v):
        self.store.remove(self.scope[i - 1], v)

    def as_sets(self) -> list[set]:
        return [set(self.values(i)) for i in range(1, self.n + 1)]


def make_store(domains) -> tuple[DomainStore, Trail]:
    """Convenience: fresh trail plus store over the given domains."""
    trail = Trail()
    return DomainStore(domains, trail), trail
