"""Support bookkeeping for variables skipped by long edges, plus the
wildcard-node alternative.

A long edge from layer a to layer b supports every current value of the
skipped layers a+1..b-1.  Per distinct skipped interval we keep a live
counter; the union of positive intervals is maintained three ways (the
mechanisms must always agree, which the tests exercise):

  * per-layer coverage counters - authoritative O(1) membership,
  * per-start lazy max-heaps    - O(n) longest-outgoing-edge sweep,
  * counted-segment union       - reports newly uncovered layers on delete.

Coverage may nominally over-support a value whose explicit removal
already pruned it; that is safe because argument values leave the
domains before any support is consulted.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, insort


class IntervalUnion:
    """Union of a multiset of integer intervals as counted disjoint
    segments.  Segments split on demand and are never re-merged, so a
    remove can report exactly the coordinates whose coverage hit zero.
    """

    __slots__ = ("segs",)

    def __init__(self):
        self.segs: list[list[int]] = []  # [start, end, count], disjoint, sorted

    def _split(self, x: int):
        # Ensure no segment straddles the boundary just before x.
        segs = self.segs
        k = bisect_left(segs, [x]) - 1
        if k >= 0:
            s = segs[k]
            if s[0] < x <= s[1]:
                segs.insert(k + 1, [x, s[1], s[2]])
                s[1] = x - 1

    def add(self, i: int, j: int):
        self._split(i)
        self._split(j + 1)
        segs = self.segs
        k = bisect_left(segs, [i])
        x = i
        while x <= j:
            if k < len(segs) and segs[k][0] == x:
                segs[k][2] += 1
                x = segs[k][1] + 1
                k += 1
            else:
                end = j if k >= len(segs) else min(j, segs[k][0] - 1)
                segs.insert(k, [x, end, 1])
                x = end + 1
                k += 1

    def remove(self, i: int, j: int) -> list[int]:
        """Decrement over [i, j]; return coordinates no longer covered."""
        self._split(i)
        self._split(j + 1)
        segs = self.segs
        k = bisect_left(segs, [i])
        uncovered = []
        while k < len(segs) and segs[k][0] <= j:
            s = segs[k]
            s[2] -= 1
            if s[2] == 0:
                uncovered.extend(range(s[0], s[1] + 1))
                segs.pop(k)
            else:
                k += 1
        return uncovered

    def covers(self, x: int) -> bool:
        k = bisect_left(self.segs, [x + 1]) - 1
        return k >= 0 and self.segs[k][0] <= x <= self.segs[k][1]

    def covered_set(self) -> set[int]:
        out = set()
        for s in self.segs:
            out.update(range(s[0], s[1] + 1))
        return out


class LongEdgeRegistry:
    """Live counters per distinct skipped interval of the long edges."""

    __slots__ = ("n", "trail", "counters", "heaps", "cover", "union")

    def __init__(self, n: int, trail):
        self.n = n
        self.trail = trail
        self.counters: dict[tuple[int, int], int] = {}
        self.heaps = [[] for _ in range(n + 2)]  # per start layer: -end
        self.cover = [0] * (n + 2)
        self.union = IntervalUnion()

    @staticmethod
    def interval_for(edge) -> tuple[int, int]:
        return (edge.src.layer + 1, edge.dst.layer - 1)

    def live_intervals(self) -> set[tuple[int, int]]:
        return {iv for iv, c in self.counters.items() if c > 0}

    def add_interval(self, i: int, j: int):
        c = self.counters.get((i, j), 0) + 1
        self.counters[(i, j)] = c
        born = c == 1
        if born:
            cover = self.cover
            for k in range(i, j + 1):
                cover[k] += 1
            heapq.heappush(self.heaps[i], -j)
            self.union.add(i, j)
        self.trail.ops.append((self._undo_add, i, j, born))

    def _undo_add(self, i, j, born):
        c = self.counters[(i, j)] - 1
        if c:
            self.counters[(i, j)] = c
        else:
            del self.counters[(i, j)]
        if born:
            cover = self.cover
            for k in range(i, j + 1):
                cover[k] -= 1
            self.union.remove(i, j)
            # lazy heap: the stale entry is filtered by the counter check

    def remove_interval(self, i: int, j: int) -> list[int]:
        """Decrement the interval counter; when it dies, report the layers
        that lost their last interval coverage."""
        c = self.counters[(i, j)] - 1
        died = c == 0
        if died:
            del self.counters[(i, j)]
        else:
            self.counters[(i, j)] = c
        uncovered = []
        if died:
            cover = self.cover
            for k in range(i, j + 1):
                cover[k] -= 1
                if not cover[k]:
                    uncovered.append(k)
            self.union.remove(i, j)
        self.trail.ops.append((self._undo_remove, i, j, died))
        return uncovered

    def _undo_remove(self, i, j, died):
        self.counters[(i, j)] = self.counters.get((i, j), 0) + 1
        if died:
            cover = self.cover
            for k in range(i, j + 1):
                cover[k] += 1
            self.union.add(i, j)
            heapq.heappush(self.heaps[i], -j)

    def covers(self, layer: int) -> bool:
        return self.cover[layer] > 0

    def covered_variables(self) -> list[bool]:
        """O(n) sweep over the per-start heaps of longest interval ends.

        Index k of the result tells whether layer k (1-based) has full
        long-edge coverage; entry 0 is padding.
        """
        out = [False] * (self.n + 1)
        counters = self.counters
        best = 0
        for k in range(1, self.n + 1):
            h = self.heaps[k]
            while h and counters.get((k, -h[0]), 0) == 0:
                heapq.heappop(h)
            if h and -h[0] > best:
                best = -h[0]
            out[k] = best >= k
        return out


class WildcardState:
    """Per-layer live wildcard-node counts and the values whose only
    remaining support is a wildcard (flushed into domain removals when
    the last wildcard of the layer dies)."""

    __slots__ = ("w", "deferred", "trail")

    def __init__(self, n: int, trail):
        self.w = [0] * (n + 2)
        self.deferred: list[list] = [[] for _ in range(n + 2)]
        self.trail = trail

    def init_count(self, layer: int):
        self.w[layer] += 1

    def defer(self, layer: int, value):
        self.deferred[layer].append(value)
        self.trail.ops.append((self._undo_defer, layer))

    def _undo_defer(self, layer):
        self.deferred[layer].pop()

    def wildcard_died(self, layer: int) -> list:
        """Decrement the layer count; on reaching zero, drain and return
        the deferred values (the caller removes them from the domain)."""
        self.w[layer] -= 1
        self.trail.ops.append((self._undo_died, layer))
        out = []
        if self.w[layer] == 0:
            bucket = self.deferred[layer]
            while bucket:
                v = bucket.pop()
                self.trail.ops.append((self._undo_flush, layer, v))
                out.append(v)
        return out

    def _undo_died(self, layer):
        self.w[layer] += 1

    def _undo_flush(self, layer, v):
        self.deferred[layer].append(v)
