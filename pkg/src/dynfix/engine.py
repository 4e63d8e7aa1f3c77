"""Epoch pipeline driving any LFL plugin over a changing topology.

Each epoch is ``gamma`` rounds: offset 0 prepares labels and broadcasts
node excerpts, offsets 1-3 flood hashed timestamps to radius 3 (the active
nodes are elected at the end of offset 3), and the last offset runs fix at
every untainted active node. Dirty means "owns a timestamp".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .dyngraph import (
    EventKind,
    Snapshot,
    TopologyEvent,
    UnsupportedEventKind,
    apply_events,
    empty_snapshot,
)
from .lfl import DirtyMark, LflPlugin
from .timestamp import (
    GammaConfig,
    HashedTimestamp,
    Order,
    Timestamp,
    cmp_hashed,
    hash_timestamp,
)
from .wire import TAG_BITS, bit_budget, pack

__all__ = [
    "Engine",
    "RoundStats",
    "BitBudgetExceeded",
    "DegreeBoundExceeded",
    "EngineInvariantError",
    "PHASES",
    "MSG_NODE_EXCERPT",
    "MSG_HASHED_TS",
    "MSG_FIX_DELTA",
    "encode_message",
]

PHASES = ("prep", "propagate", "propagate", "propagate", "fix")

MSG_NODE_EXCERPT = 0
MSG_HASHED_TS = 1
MSG_FIX_DELTA = 2


class BitBudgetExceeded(RuntimeError):
    def __init__(self, kind: int, bits: int, budget: int):
        super().__init__(f"message of type {kind} needs {bits} bits, budget is {budget}")
        self.kind = kind
        self.bits = bits
        self.budget = budget


class DegreeBoundExceeded(ValueError):
    pass


class EngineInvariantError(AssertionError):
    pass


def encode_message(kind: int, payload: tuple, plugin: LflPlugin, cfg: GammaConfig) -> tuple[int, int]:
    """Bit-exact encoding: 2-bit tag, then the payload fields big-endian."""
    if kind == MSG_NODE_EXCERPT:
        (x,) = payload
        fields = [(plugin.encode_node_excerpt(x), plugin.node_excerpt_bits)]
    elif kind == MSG_HASHED_TS:
        (hts,) = payload
        ib = cfg.id_bits
        fields = [(hts.h, cfg.h_bits), (hts.owner, ib), (hts.other, ib)]
    elif kind == MSG_FIX_DELTA:
        edge_exc, beta, own = payload
        nb = plugin.node_excerpt_bits
        fields = [(plugin.encode_edge_excerpt(edge_exc), plugin.edge_excerpt_bits),
                  (plugin.encode_node_excerpt(beta), nb), (plugin.encode_node_excerpt(own), nb)]
    else:
        raise ValueError(f"unknown message type {kind}")
    return pack([(kind, TAG_BITS)] + fields)


@dataclass
class RoundStats:
    round: int
    epoch: int
    phase: str
    dirty: int = 0
    indicated: int = 0
    tainted: int = 0
    actives: int = 0
    aborted: int = 0
    messages: int = 0
    max_message_bits: int = 0
    changes: int = 0


@dataclass
class FixRecord:
    node: int
    origin: str
    old: Any
    new: Any
    receivers: tuple[int, ...]


@dataclass
class _View:
    """Dirty-rule view: labels as of the start of the round, post-event adjacency."""

    engine: "Engine"
    pre: Snapshot
    post: Snapshot

    def label(self, v: int):
        return self.engine.labels[v]

    def nbrs(self, v: int) -> frozenset:
        return self.post.adj.get(v, frozenset())

    def old_nbrs(self, v: int) -> frozenset:
        return self.pre.adj.get(v, frozenset())

    def is_dirty(self, v: int) -> bool:
        return v in self.engine.ts

    def is_present(self, v: int) -> bool:
        return v in self.post.adj


@dataclass
class _FixView:
    engine: "Engine"

    def label(self, v: int):
        return self.engine.labels[v]

    def nbrs(self, v: int) -> frozenset:
        return self.engine.snapshot.adj.get(v, frozenset())

    def old_nbrs(self, v: int) -> frozenset:
        return self.nbrs(v)

    def is_dirty(self, v: int) -> bool:
        return v in self.engine.ts

    def is_present(self, v: int) -> bool:
        return v in self.engine.snapshot.adj


class Engine:
    def __init__(self, plugin: LflPlugin, n: int, gamma: int = 5,
                 initial: Snapshot | None = None, labels: dict | None = None,
                 strict_budget: bool = True):
        self.plugin = plugin
        self.cfg = GammaConfig(n, gamma)
        self.gamma = gamma
        self.n = n
        self.snapshot = initial if initial is not None else empty_snapshot(n)
        self.round = self.snapshot.round + 1
        if labels is None:
            labels = {v: plugin.initial_label(v, nb) for v, nb in self.snapshot.adj.items()}
        self.labels: dict[int, Any] = dict(labels)
        self.prepared_for: dict[int, frozenset] = dict(self.snapshot.adj)
        self.ts: dict[int, Timestamp] = {}
        self.origin: dict[int, str] = {}
        self.budget = bit_budget(n)
        self.strict_budget = strict_budget
        self.max_degree: int | None = getattr(plugin, "delta", None)

        # epoch state
        self.epoch = self.round // gamma
        self.D: frozenset = frozenset()
        self.indicated: set[int] = set()
        self.tainted: set[int] = set()
        self.last_ind: dict[int, Timestamp] = {}
        self.stale: set[int] = set()
        # neighbors lost since the node's last prep; a lost neighbor that is back
        # by prep time must still be seen as deleted, then inserted
        self.lost: dict[int, set[int]] = {}
        self.snap_gj: Snapshot = self.snapshot
        self.gj_excerpt: dict[int, Any] = {}
        self.own_hash: dict[int, HashedTimestamp] = {}
        self.best: dict[int, HashedTimestamp] = {}
        self.min_recv: dict[int, HashedTimestamp] = {}
        self.active: list[int] = []
        self.epoch_messages = 0
        self.epochs_with_messages = 0
        self.changes = 0

        # per-round observations for the monitor
        self.touched: set[int] = set()
        self.fixes: list[FixRecord] = []
        self.aborts: list[int] = []
        self.max_bits_seen = 0
        self.fix_bits = self._bits(MSG_FIX_DELTA)
        self.excerpt_bits = self._bits(MSG_NODE_EXCERPT)
        self.hash_bits = self._bits(MSG_HASHED_TS)

    # -- helpers -------------------------------------------------------------
    def _bits(self, kind: int) -> int:
        p = self.plugin
        if kind == MSG_NODE_EXCERPT:
            bits = TAG_BITS + p.node_excerpt_bits
        elif kind == MSG_HASHED_TS:
            bits = TAG_BITS + self.cfg.h_bits + 2 * self.cfg.id_bits
        else:
            bits = TAG_BITS + p.edge_excerpt_bits + 2 * p.node_excerpt_bits
        if bits > self.budget and self.strict_budget:
            raise BitBudgetExceeded(kind, bits, self.budget)
        return bits

    def _less(self, a: HashedTimestamp, b: HashedTimestamp) -> bool:
        return cmp_hashed(a, b, self.cfg) is Order.LESS

    def _mark(self, owner: int, ts: Timestamp, origin: str) -> None:
        cur = self.ts.get(owner)
        if cur is None or ts > cur:
            self.ts[owner] = ts
            self.origin[owner] = origin

    @property
    def offset(self) -> int:
        return self.round % self.gamma

    def clean(self) -> set[int]:
        return {v for v in self.snapshot.adj if v not in self.ts}

    # -- round loop ----------------------------------------------------------
    def step(self, events: Iterable[TopologyEvent] = ()) -> RoundStats:
        r = self.round
        g = self.gamma
        o = r % g
        j = r // g
        self.touched = set()
        self.fixes = []
        self.aborts = []
        if o == 0:
            self._begin_epoch(j)
        phase = "prep" if o == 0 else "propagate" if o <= 3 else "fix" if o == g - 1 else "wait"
        stats = RoundStats(r, j, phase)

        events = list(events)
        if events:
            self._apply(events, stats)
        else:
            self.snapshot = Snapshot(r, self.n, self.snapshot.adj)

        if o == 0:
            self.snap_gj = self.snapshot
        if j >= 1:
            if o == 0:
                self._phase_prep(stats)
            elif o <= 3:
                self._phase_propagate(o, stats)
            elif o == g - 1:
                self._phase_fix(stats)
        if o == g - 1:
            self._advance_epoch()

        stats.dirty = len(self.ts)
        stats.indicated = len(self.indicated)
        stats.tainted = len(self.tainted)
        stats.actives = len(self.active)
        stats.changes = self.changes
        self.round = r + 1
        return stats

    def _begin_epoch(self, j: int) -> None:
        self.epoch = j
        self.D = frozenset(self.ts)
        self.indicated = set()
        self.tainted = set()
        self.last_ind = {}
        self.own_hash = {}
        self.best = {}
        self.min_recv = {}
        self.active = []
        self.epoch_messages = 0

    def _apply(self, events: list[TopologyEvent], stats: RoundStats) -> None:
        plugin = self.plugin
        for ev in events:
            if ev.kind not in plugin.supported:
                raise UnsupportedEventKind(plugin.name, ev.kind, ev)
        pre = self.snapshot
        post, inds = apply_events(pre, events)
        r = self.round
        self.changes += len(events)

        inserted = [ev.u for ev in events if ev.kind is EventKind.NODE_INSERT]
        deleted = [ev.u for ev in events if ev.kind is EventKind.NODE_DELETE]
        for v in inserted:
            nb = post.adj[v]
            self.labels[v] = plugin.initial_label(v, nb)
            self.prepared_for[v] = nb
            self.lost.pop(v, None)
            self.touched.add(v)
        for ev in events:
            if ev.kind is EventKind.EDGE_DELETE:
                self.lost.setdefault(ev.u, set()).add(ev.v)
                self.lost.setdefault(ev.v, set()).add(ev.u)
            elif ev.kind is EventKind.NODE_DELETE:
                for w in pre.adj[ev.u]:
                    self.lost.setdefault(w, set()).add(ev.u)

        view = _View(self, pre, post)
        marks: list[tuple[DirtyMark, int]] = []
        for ev in sorted(events, key=TopologyEvent.sort_key):
            for m in plugin.dirty_rule(ev, view):
                marks.append((m, ev.round))

        for v in deleted:
            del self.labels[v]
            self.prepared_for.pop(v, None)
            self.lost.pop(v, None)
            self.ts.pop(v, None)
            self.origin.pop(v, None)
            self.tainted.discard(v)
            self.stale.discard(v)
            self.touched.add(v)
        self.snapshot = post

        for ind in inds:
            v = ind.node
            self.indicated.add(v)
            self.tainted.add(v)
            self.touched.add(v)
            if ind.event.kind is not EventKind.NODE_INSERT or ind.event.u != v:
                self.stale.add(v)
            t = Timestamp(r, v, ind.other)
            cur = self.last_ind.get(v)
            if cur is None or t > cur:
                self.last_ind[v] = t
        for m, rnd in marks:
            if m.owner in post.adj:
                self._mark(m.owner, Timestamp(rnd, m.owner, m.other), m.origin)

        if self.max_degree is not None:
            for v in self.touched:
                nb = post.adj.get(v)
                if nb is not None and len(nb) > self.max_degree:
                    raise DegreeBoundExceeded(f"node {v} has degree {len(nb)} > {self.max_degree}")

    def _send(self, stats: RoundStats, count: int, bits: int) -> None:
        if count:
            stats.messages += count
            self.epoch_messages += count
            if bits > stats.max_message_bits:
                stats.max_message_bits = bits
            if bits > self.max_bits_seen:
                self.max_bits_seen = bits

    def _phase_prep(self, stats: RoundStats) -> None:
        plugin = self.plugin
        adj = self.snapshot.adj
        for v in sorted(self.D.union(self.stale)):
            nb = adj.get(v)
            if nb is None:
                continue
            old = self.labels[v]
            before = self.prepared_for[v]
            back = self.lost.pop(v, set()) & before & nb
            if back:
                mid = before - back
                new = plugin.prep(v, mid, nb, plugin.prep(v, before, mid, old))
            else:
                new = plugin.prep(v, before, nb, old)
            self.prepared_for[v] = nb
            if new != old:
                self.labels[v] = new
                self.touched.add(v)
        self.stale = set()
        if not self.D:
            self.gj_excerpt = {}
            return
        exc = {v: plugin.node_excerpt(v, self.labels[v]) for v in adj}
        nb_bits = plugin.node_excerpt_bits
        for x in set(exc.values()):
            pack([(plugin.encode_node_excerpt(x), nb_bits)])
        self.gj_excerpt = exc
        self._send(stats, sum(len(nb) for nb in adj.values()), self.excerpt_bits)

    def _phase_propagate(self, o: int, stats: RoundStats) -> None:
        adj = self.snapshot.adj
        less = self._less
        if o == 1:
            outgoing = {}
            for v in sorted(self.D):
                t = self.ts.get(v)
                if t is None or v not in adj:
                    continue
                h = hash_timestamp(t, self.cfg)
                self.own_hash[v] = h
                outgoing[v] = h
            self.best = dict(outgoing)
        else:
            outgoing = {v: h for v, h in self.best.items() if v in adj}
        if not outgoing:
            if o == 3:
                self._elect()
            return
        count = 0
        best = self.best
        min_recv = self.min_recv
        for v, h in outgoing.items():
            nb = adj[v]
            count += len(nb)
            for u in nb:
                cur = min_recv.get(u)
                if cur is None or less(h, cur):
                    min_recv[u] = h
                cur = best.get(u)
                if cur is None or less(h, cur):
                    best[u] = h
        self._send(stats, count, self.hash_bits)
        if o == 3:
            self._elect()

    def _elect(self) -> None:
        act = []
        for v, h in self.own_hash.items():
            if v not in self.ts or v not in self.snapshot.adj:
                continue
            m = self.min_recv.get(v)
            if m is None or not self._less(m, h):
                act.append(v)
        self.active = sorted(act)

    def _phase_fix(self, stats: RoundStats) -> None:
        plugin = self.plugin
        adj = self.snapshot.adj
        gj_adj = self.snap_gj.adj
        receivers_seen: dict[int, int] = {}
        done: list[tuple[int, Any, Any, str]] = []
        count = 0
        for v in self.active:
            if v not in adj:
                continue
            if v in self.tainted:
                t = max(self.ts[v], self.last_ind[v])
                self.ts[v] = t
                self.aborts.append(v)
                stats.aborted += 1
                continue
            if v in receivers_seen:
                raise EngineInvariantError(f"fixer {v} was already updated by {receivers_seen[v]}")
            nbrs = sorted(gj_adj[v])
            if adj[v] != gj_adj[v]:
                raise EngineInvariantError(f"untainted active {v} saw its neighborhood change")
            old = self.labels[v]
            new, betas = plugin.fix(v, nbrs, old, tuple(self.gj_excerpt[u] for u in nbrs))
            own = plugin.node_excerpt(v, new)
            for u, beta in zip(nbrs, betas):
                if u in receivers_seen or u in self.active and u not in self.tainted:
                    raise EngineInvariantError(
                        f"node {u} is updated by fixers {receivers_seen.get(u, u)} and {v}")
                receivers_seen[u] = v
                ee = plugin.edge_excerpt(v, new, u)
                encode_message(MSG_FIX_DELTA, (ee, beta, own), plugin, self.cfg)
                lu = self.labels[u]
                nu = plugin.apply_delta(u, lu, v, ee, beta)
                if nu != lu:
                    self.labels[u] = nu
                    self.touched.add(u)
            count += len(nbrs)
            self.labels[v] = new
            if new != old:
                self.touched.add(v)
            origin = self.origin.pop(v, "")
            del self.ts[v]
            done.append((v, old, new, origin))
            self.fixes.append(FixRecord(v, origin, old, new, tuple(nbrs)))
        self._send(stats, count, self.fix_bits)

        if done:
            view = _FixView(self)
            r = self.round
            for v, old, new, origin in done:
                extra_dirty, extra_clean = plugin.post_fix(v, old, new, view, origin)
                for z in extra_dirty:
                    self._mark(z, Timestamp(r, z, v), "item5")
                for z in extra_clean:
                    if self.ts.pop(z, None) is not None:
                        self.origin.pop(z, None)

    def _advance_epoch(self) -> None:
        if self.epoch_messages:
            self.epochs_with_messages += 1

    # -- introspection ---------------------------------------------------------
    def dirty_set(self) -> frozenset:
        return frozenset(self.ts)

    def is_quiescent(self) -> bool:
        return not self.ts
