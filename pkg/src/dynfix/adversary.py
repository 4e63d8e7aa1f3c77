"""Schedule sources: file replay, seeded random churn and targeted stress patterns."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

from .dyngraph import (
    EventKind,
    Snapshot,
    TopologyEvent,
    apply_events,
    empty_snapshot,
    parse_schedule,
)

__all__ = [
    "Replay",
    "RandomChurn",
    "Pattern",
    "ScheduleSpec",
    "InfeasibleSpec",
    "generate",
    "replay",
    "check_applicable",
    "PATTERNS",
    "SUPPORTED_KINDS",
]

E_INS, E_DEL, V_INS, V_DEL = EventKind.EDGE_INSERT, EventKind.EDGE_DELETE, EventKind.NODE_INSERT, EventKind.NODE_DELETE

SUPPORTED_KINDS = {
    "mm": frozenset(EventKind),
    "mis": frozenset(EventKind),
    "coloring-delta": frozenset(EventKind),
    "coloring-deg": frozenset({E_INS, E_DEL, V_INS}),
    "mwvc": frozenset({E_INS, E_DEL, V_INS}),
}

DEFAULT_MIX = {E_INS: 4.0, E_DEL: 4.0, V_INS: 1.0, V_DEL: 1.0}


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class Replay:
    path: str


@dataclass(frozen=True)
class RandomChurn:
    """Up to ``rate`` events per round; ``mix`` weighs the event kinds.

    ``max_edges`` caps the edge count (default 2n) so the graph stays sparse;
    ``max_degree`` is honored for protocols with a degree bound.
    """

    rate: int
    mix: Mapping[EventKind, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    protocol: str | None = None
    max_edges: int | None = None
    max_degree: int | None = None
    start: int = 0
    redraws: int = 8


@dataclass(frozen=True)
class Pattern:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


Mode = Union[Replay, RandomChurn, Pattern]


@dataclass(frozen=True)
class ScheduleSpec:
    n: int
    rounds: int
    seed: int = 0
    mode: Mode = field(default_factory=lambda: RandomChurn(1))


# -- replay --------------------------------------------------------------------

def replay(path: str | Path, n: int | None = None) -> list[TopologyEvent]:
    """Read a JSONL schedule, sort it by round and check that it applies cleanly."""
    with open(path, encoding="utf-8") as fh:
        events = parse_schedule(fh)
    events.sort(key=TopologyEvent.sort_key)
    if events:
        if n is None:
            n = 1 + max(max([e.u] + ([e.v] if e.v is not None else []) + list(e.edges)) for e in events)
        check_applicable(events, n)
    return events


def check_applicable(events: Iterable[TopologyEvent], n: int,
                     initial: Snapshot | None = None) -> Snapshot:
    """Apply every round's batch in order; raises InvalidEvent on the first bad one."""
    snap = initial if initial is not None else empty_snapshot(n)
    for rnd, batch in groupby(sorted(events, key=TopologyEvent.sort_key), key=lambda e: e.round):
        if rnd <= snap.round:
            raise ValueError(f"round {rnd} is not after {snap.round}")
        snap = Snapshot(rnd - 1, n, snap.adj)
        snap, _ = apply_events(snap, list(batch))
    return snap


# -- random churn --------------------------------------------------------------

class _Graph:
    def __init__(self, n: int):
        self.n = n
        self.present = set(range(n))
        self.adj: dict[int, set[int]] = {v: set() for v in range(n)}
        self.edges: set[tuple[int, int]] = set()

    def add_edge(self, a: int, b: int) -> None:
        self.adj[a].add(b)
        self.adj[b].add(a)
        self.edges.add((min(a, b), max(a, b)))

    def del_edge(self, a: int, b: int) -> None:
        self.adj[a].discard(b)
        self.adj[b].discard(a)
        self.edges.discard((min(a, b), max(a, b)))

    def add_node(self, v: int, nbrs: Iterable[int]) -> None:
        self.present.add(v)
        self.adj[v] = set()
        for u in nbrs:
            self.add_edge(v, u)

    def del_node(self, v: int) -> None:
        for u in list(self.adj[v]):
            self.del_edge(v, u)
        self.present.discard(v)


def _churn(spec: ScheduleSpec, mode: RandomChurn) -> list[TopologyEvent]:
    n = spec.n
    if mode.rate < 0:
        raise InfeasibleSpec("negative churn rate")
    if mode.rate == 0 or spec.rounds <= 0:
        return []
    allowed = set(SUPPORTED_KINDS.get(mode.protocol, frozenset(EventKind))) if mode.protocol else set(EventKind)
    mix = {k: float(w) for k, w in mode.mix.items() if w > 0 and EventKind(k) in allowed}
    if not mix:
        raise InfeasibleSpec("event mix has no kind the protocol supports")
    cap = mode.max_edges if mode.max_edges is not None else 2 * n
    only_edges = set(mix) <= {E_INS, E_DEL}
    if only_edges and mode.rate > n * (n - 1) // 2:
        raise InfeasibleSpec(f"rate {mode.rate} exceeds the {n * (n - 1) // 2} possible edges")
    if mode.rate > n * (n - 1) // 2 + n:
        raise InfeasibleSpec(f"rate {mode.rate} exceeds the possible changes per round")
    if n < 2 and only_edges:
        raise InfeasibleSpec("edge churn needs at least two nodes")
    dmax = mode.max_degree

    rng = random.Random(spec.seed)
    g = _Graph(n)
    kinds = sorted(mix, key=lambda k: k.value)
    weights = [mix[k] for k in kinds]
    out: list[TopologyEvent] = []
    for r in range(mode.start, spec.rounds):
        budget = rng.randint(0, mode.rate)
        busy_nodes: set[int] = set()
        busy_edges: set[tuple[int, int]] = set()
        for _ in range(budget):
            ev = None
            for _attempt in range(mode.redraws):
                kind = rng.choices(kinds, weights)[0]
                ev = _draw(rng, g, kind, r, busy_nodes, busy_edges, cap, dmax)
                if ev is not None:
                    break
            if ev is None:
                continue
            out.append(ev)
            if ev.kind.is_edge:
                busy_edges.add(ev.edge)
                (g.add_edge if ev.kind is E_INS else g.del_edge)(ev.u, ev.v)
            elif ev.kind is V_INS:
                busy_nodes.add(ev.u)
                busy_edges.update((min(ev.u, w), max(ev.u, w)) for w in ev.edges)
                g.add_node(ev.u, ev.edges)
            else:
                busy_nodes.add(ev.u)
                g.del_node(ev.u)
    return out


def _draw(rng: random.Random, g: _Graph, kind: EventKind, r: int, busy_nodes: set, busy_edges: set,
          cap: int, dmax: int | None) -> TopologyEvent | None:
    # nodes inserted or deleted this round take no further part in it
    live = [v for v in sorted(g.present) if v not in busy_nodes]
    if kind is E_INS:
        if len(g.edges) >= cap or len(live) < 2:
            return None
        a, b = rng.sample(live, 2)
        e = (min(a, b), max(a, b))
        if e in g.edges or e in busy_edges:
            return None
        if dmax is not None and (len(g.adj[a]) >= dmax or len(g.adj[b]) >= dmax):
            return None
        return TopologyEvent.edge_insert(r, e[0], e[1])
    if kind is E_DEL:
        cands = [e for e in sorted(g.edges) if e not in busy_edges and e[0] not in busy_nodes
                 and e[1] not in busy_nodes]
        if not cands:
            return None
        e = rng.choice(cands)
        return TopologyEvent.edge_delete(r, e[0], e[1])
    if kind is V_INS:
        absent = [v for v in range(g.n) if v not in g.present and v not in busy_nodes]
        if not absent:
            return None
        v = rng.choice(absent)
        k = rng.randint(0, min(3, len(live)))
        nbrs = []
        for w in rng.sample(live, k):
            if dmax is not None and len(g.adj[w]) >= dmax:
                continue
            if len(g.edges) + len(nbrs) >= cap:
                break
            nbrs.append(w)
        if dmax is not None:
            nbrs = nbrs[:dmax]
        return TopologyEvent.node_insert(r, v, sorted(nbrs))
    touched = {x for e in busy_edges for x in e}
    cands = [v for v in live if v not in touched]
    if not cands:
        return None
    return TopologyEvent.node_delete(r, rng.choice(cands))


# -- patterns ------------------------------------------------------------------

def _matched_edge_churn(spec: ScheduleSpec, params: Mapping[str, Any]) -> list[TopologyEvent]:
    """Keep deleting the edge the designated node is currently matched on.

    The generator runs the matching engine itself to know the current partner;
    deleted edges come back ``restore`` rounds later so the supply never runs out.
    """
    from .engine import Engine
    from .protocols.matching import MaximalMatching

    n = spec.n
    if n < 3:
        raise InfeasibleSpec("matched-edge-churn needs at least 3 nodes")
    hub = int(params.get("node", 0))
    gamma = int(params.get("gamma", 5))
    period = int(params.get("period", 2 * gamma))
    restore = int(params.get("restore", 3 * gamma))
    if not 0 <= hub < n:
        raise InfeasibleSpec(f"designated node {hub} out of range")
    eng = Engine(MaximalMatching(n), n, gamma)
    leaves = [v for v in range(n) if v != hub]
    pending: dict[int, list[tuple[int, int]]] = {}
    out: list[TopologyEvent] = []
    for r in range(spec.rounds):
        batch: list[TopologyEvent] = []
        if r == 0:
            batch = [TopologyEvent.edge_insert(0, min(hub, u), max(hub, u)) for u in leaves]
        else:
            for e in pending.pop(r, []):
                batch.append(TopologyEvent.edge_insert(r, *e))
            mate = eng.labels.get(hub)
            if r % period == 0 and mate is not None and not any(ev.edge == (min(hub, mate), max(hub, mate))
                                                                   for ev in batch):
                e = (min(hub, mate), max(hub, mate))
                batch.append(TopologyEvent.edge_delete(r, *e))
                pending.setdefault(r + restore, []).append(e)
        out.extend(batch)
        eng.step(batch)
    return out


def _mis_cascade(spec: ScheduleSpec, params: Mapping[str, Any]) -> list[TopologyEvent]:
    """Two stars whose hubs are in the set; joining the hubs flips one of them
    and frees all of its leaves at once. The gadget is torn down and rebuilt
    ``repeats`` times."""
    n = spec.n
    if n < 4:
        raise InfeasibleSpec("mis-cascade needs at least 4 nodes")
    gamma = int(params.get("gamma", 5))
    # leaves of one star are within distance 3 of each other, so they settle one per epoch
    wait = int(params.get("wait", gamma * ((n - 1) // 2 + 6)))
    repeats = int(params.get("repeats", 3))
    # hubs get the largest ids so a leaf-hub insertion marks the leaf
    a, b = n - 2, n - 1
    leaves = list(range(n - 2))
    la, lb = leaves[: len(leaves) // 2 + len(leaves) % 2], leaves[len(leaves) // 2 + len(leaves) % 2:]
    if not la:
        raise InfeasibleSpec("mis-cascade needs leaves")
    star = [(x, a) for x in la] + [(x, b) for x in lb]
    out: list[TopologyEvent] = []
    r = 0
    for _ in range(repeats):
        if r + 2 * wait >= spec.rounds:
            break
        out += [TopologyEvent.edge_insert(r, x, h) for x, h in star]
        r += wait
        out.append(TopologyEvent.edge_insert(r, a, b))
        r += wait
        out += [TopologyEvent.edge_delete(r, x, h) for x, h in star + [(a, b)]]
        r += wait
    return [e for e in out if e.round < spec.rounds]


PATTERNS = {
    "matched-edge-churn": _matched_edge_churn,
    "mis-cascade": _mis_cascade,
}


def generate(spec: ScheduleSpec) -> list[TopologyEvent]:
    """Pure function of ``spec``; events come out sorted by round."""
    if spec.n < 1:
        raise InfeasibleSpec("n must be positive")
    mode = spec.mode
    if isinstance(mode, Replay):
        return [e for e in replay(mode.path, spec.n) if e.round < spec.rounds]
    if isinstance(mode, RandomChurn):
        return _churn(spec, mode)
    if isinstance(mode, Pattern):
        try:
            fn = PATTERNS[mode.name]
        except KeyError:
            raise InfeasibleSpec(f"unknown pattern {mode.name!r}") from None
        return sorted(fn(spec, mode.params), key=TopologyEvent.sort_key)
    raise TypeError(f"unknown schedule mode {mode!r}")
