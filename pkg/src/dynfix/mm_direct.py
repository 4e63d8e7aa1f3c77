"""Hand-specialized maximal matching loop, written without the plugin layer.

It exists to cross-check the generic engine: driven by the same schedule,
both must produce identical per-round statistics and labels.
"""

from __future__ import annotations

from typing import Iterable

from .dyngraph import EventKind, Snapshot, TopologyEvent, apply_events, empty_snapshot
from .engine import RoundStats
from .timestamp import GammaConfig, HashedTimestamp, Order, cmp_hashed
from .wire import TAG_BITS, clog2

UNMATCHED = -1


class DirectMatching:
    def __init__(self, n: int, gamma: int = 5):
        self.n = n
        self.gamma = gamma
        self.cfg = GammaConfig(n, gamma)
        self.snap = empty_snapshot(n)
        self.round = 0
        self.mate = [UNMATCHED] * n
        self.present = [True] * n
        self.prep_nbrs = [frozenset()] * n
        self.lost: list[set[int]] = [set() for _ in range(n)]
        self.stamp: list[tuple | None] = [None] * n
        self.changes = 0
        id_bits = clog2(n)
        self.excerpt_bits = TAG_BITS + clog2(n + 1)
        self.hash_bits = TAG_BITS + self.cfg.h_bits + 2 * id_bits
        self.fix_bits = TAG_BITS + 1 + 2 * clog2(n + 1)
        self._reset_epoch()

    def _reset_epoch(self) -> None:
        n = self.n
        self.start_dirty = [s is not None for s in self.stamp]
        self.hit = [False] * n
        self.last_hit: list[tuple | None] = [None] * n
        self.mine: list[tuple | None] = [None] * n
        self.seen: list[tuple | None] = [None] * n
        self.heard: list[tuple | None] = [None] * n
        self.winners: list[int] = []
        self.seen_excerpt = [UNMATCHED] * n
        self.ind_set: set[int] = set()

    def labels(self) -> dict[int, int | None]:
        return {v: (None if self.mate[v] == UNMATCHED else self.mate[v])
                for v in range(self.n) if self.present[v]}

    def _smaller(self, a, b) -> bool:
        return cmp_hashed(a, b, self.cfg) is Order.LESS

    def _stamp(self, v: int, t: tuple) -> None:
        if self.stamp[v] is None or t > self.stamp[v]:
            self.stamp[v] = t

    def step(self, events: Iterable[TopologyEvent] = ()) -> RoundStats:
        r = self.round
        g = self.gamma
        off = r % g
        ep = r // g
        if off == 0:
            self._reset_epoch()
        st = RoundStats(r, ep, "prep" if off == 0 else "propagate" if off <= 3 else "fix" if off == g - 1 else "wait")
        events = list(events)
        pre = self.snap
        if events:
            post, inds = apply_events(pre, events)
            self.changes += len(events)
            for ev in sorted(events, key=TopologyEvent.sort_key):
                if ev.kind is EventKind.EDGE_DELETE:
                    self.lost[ev.u].add(ev.v)
                    self.lost[ev.v].add(ev.u)
                if ev.kind.is_edge:
                    self._stamp(ev.u, (r, ev.u, ev.v))
                    self._stamp(ev.v, (r, ev.v, ev.u))
                elif ev.kind is EventKind.NODE_INSERT:
                    self.present[ev.u] = True
                    self.mate[ev.u] = UNMATCHED
                    self.stamp[ev.u] = None
                    self.prep_nbrs[ev.u] = post.adj[ev.u]
                    self.lost[ev.u] = set()
                    self._stamp(ev.u, (r, ev.u, ev.u))
                else:
                    for w in sorted(pre.adj[ev.u]):
                        self.lost[w].add(ev.u)
                        if w in post.adj and self.mate[w] == ev.u:
                            self._stamp(w, (r, w, ev.u))
            for ev in events:
                if ev.kind is EventKind.NODE_DELETE:
                    self.present[ev.u] = False
                    self.stamp[ev.u] = None
                    self.hit[ev.u] = False
                    self.mate[ev.u] = UNMATCHED
            for ind in inds:
                v = ind.node
                self.ind_set.add(v)
                self.hit[v] = True
                t = (r, v, ind.other)
                if self.last_hit[v] is None or t > self.last_hit[v]:
                    self.last_hit[v] = t
            self.snap = post
        else:
            self.snap = Snapshot(r, self.n, pre.adj)
        adj = self.snap.adj

        if ep >= 1:
            if off == 0:
                self.gj_adj = adj
                for v in range(self.n):
                    if not self.present[v]:
                        continue
                    back = self.lost[v] & self.prep_nbrs[v] & adj[v]
                    if self.start_dirty[v] or adj[v] != self.prep_nbrs[v] or back:
                        m = self.mate[v]
                        if m != UNMATCHED and (m not in adj[v] or m in back):
                            self.mate[v] = UNMATCHED
                        self.prep_nbrs[v] = adj[v]
                        self.lost[v] = set()
                if any(self.start_dirty[v] and self.present[v] for v in range(self.n)):
                    for v in adj:
                        self.seen_excerpt[v] = self.mate[v]
                    st.messages = sum(len(nb) for nb in adj.values())
                    st.max_message_bits = self.excerpt_bits if st.messages else 0
            elif off <= 3:
                if off == 1:
                    send = {}
                    for v in range(self.n):
                        if self.start_dirty[v] and self.present[v] and self.stamp[v] is not None:
                            i, a, b = self.stamp[v]
                            self.mine[v] = HashedTimestamp(i % self.cfg.modulus, a, b)
                            send[v] = self.mine[v]
                            self.seen[v] = self.mine[v]
                else:
                    send = {v: self.seen[v] for v in adj if self.seen[v] is not None}
                for v, h in send.items():
                    for u in adj[v]:
                        if self.heard[u] is None or self._smaller(h, self.heard[u]):
                            self.heard[u] = h
                        if self.seen[u] is None or self._smaller(h, self.seen[u]):
                            self.seen[u] = h
                    st.messages += len(adj[v])
                if st.messages:
                    st.max_message_bits = self.hash_bits
                if off == 3:
                    self.winners = [v for v in range(self.n)
                                    if self.mine[v] is not None and self.present[v] and self.stamp[v] is not None
                                    and (self.heard[v] is None or not self._smaller(self.heard[v], self.mine[v]))]
            elif off == g - 1:
                for v in self.winners:
                    if not self.present[v]:
                        continue
                    if self.hit[v]:
                        self.stamp[v] = max(self.stamp[v], self.last_hit[v])
                        st.aborted += 1
                        continue
                    nbrs = sorted(self.gj_adj[v])
                    if self.mate[v] == UNMATCHED:
                        for u in nbrs:
                            if self.seen_excerpt[u] == UNMATCHED:
                                self.mate[v] = u
                                self.mate[u] = v
                                break
                    self.stamp[v] = None
                    st.messages += len(nbrs)
                if st.messages:
                    st.max_message_bits = self.fix_bits

        st.dirty = sum(1 for v in range(self.n) if self.present[v] and self.stamp[v] is not None)
        st.indicated = len(self.ind_set)
        st.tainted = sum(1 for v in range(self.n) if self.hit[v] and self.present[v])
        st.actives = len(self.winners)
        st.changes = self.changes
        self.round += 1
        return st
