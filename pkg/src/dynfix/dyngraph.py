"""Evolving topology: snapshots, round-batched events and a-posteriori indications."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

__all__ = [
    "EventKind",
    "TopologyEvent",
    "Indication",
    "Snapshot",
    "InvalidEvent",
    "AbsentNode",
    "UnsupportedEventKind",
    "ParseError",
    "empty_snapshot",
    "apply_events",
    "neighborhood",
    "invert_events",
    "validate_schedule",
    "parse_schedule_line",
    "parse_schedule",
    "dump_schedule",
    "event_to_json",
]


class EventKind(str, Enum):
    EDGE_INSERT = "e+"
    EDGE_DELETE = "e-"
    NODE_INSERT = "v+"
    NODE_DELETE = "v-"

    @property
    def is_edge(self) -> bool:
        return self in (EventKind.EDGE_INSERT, EventKind.EDGE_DELETE)


_KIND_ORDER = {k: i for i, k in enumerate(EventKind)}


@dataclass(frozen=True)
class TopologyEvent:
    """One adversarial change. ``v`` is None for node events; ``edges`` only for v+."""

    round: int
    kind: EventKind
    u: int
    v: int | None = None
    edges: tuple[int, ...] = ()

    @classmethod
    def edge_insert(cls, rnd: int, u: int, v: int) -> TopologyEvent:
        return cls(rnd, EventKind.EDGE_INSERT, u, v)

    @classmethod
    def edge_delete(cls, rnd: int, u: int, v: int) -> TopologyEvent:
        return cls(rnd, EventKind.EDGE_DELETE, u, v)

    @classmethod
    def node_insert(cls, rnd: int, u: int, edges: Iterable[int] = ()) -> TopologyEvent:
        return cls(rnd, EventKind.NODE_INSERT, u, None, tuple(sorted(edges)))

    @classmethod
    def node_delete(cls, rnd: int, u: int) -> TopologyEvent:
        return cls(rnd, EventKind.NODE_DELETE, u)

    @property
    def edge(self) -> tuple[int, int]:
        assert self.v is not None
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)

    def sort_key(self) -> tuple:
        return (self.round, _KIND_ORDER[self.kind], self.u, -1 if self.v is None else self.v, self.edges)

    def at(self, rnd: int) -> TopologyEvent:
        return TopologyEvent(rnd, self.kind, self.u, self.v, self.edges)


@dataclass(frozen=True)
class Indication:
    node: int
    event: TopologyEvent

    @property
    def other(self) -> int:
        """The far end of the change as seen from ``node``."""
        ev = self.event
        if ev.kind.is_edge:
            return ev.v if self.node == ev.u else ev.u  # type: ignore[return-value]
        return ev.u


class InvalidEvent(ValueError):
    def __init__(self, event: TopologyEvent, reason: str):
        super().__init__(f"{reason}: {event}")
        self.event = event
        self.reason = reason


class AbsentNode(KeyError):
    pass


class UnsupportedEventKind(ValueError):
    def __init__(self, protocol: str, kind: EventKind, event: TopologyEvent | None = None):
        super().__init__(f"protocol {protocol!r} does not support {kind.value} events")
        self.protocol = protocol
        self.kind = kind
        self.event = event


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Graph at the end of event application for ``round``.

    ``adj`` maps every present node to its open neighborhood; it is never
    mutated after construction, so unchanged entries are shared between
    consecutive snapshots.
    """

    round: int
    n: int
    adj: Mapping[int, frozenset[int]] = field(repr=False)

    @cached_property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.adj)

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for u, nb in self.adj.items() for v in nb if u < v)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.adj.get(u)
        return nb is not None and v in nb

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (self.round, self.n, self.nodes, self.edges) == (other.round, other.n, other.nodes, other.edges)

    def __hash__(self) -> int:
        return hash((self.round, self.n, self.nodes, self.edges))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], nodes: Iterable[int] | None = None,
                   round: int = -1) -> Snapshot:
        present = set(range(n) if nodes is None else nodes)
        adj: dict[int, set[int]] = {v: set() for v in present}
        for u, v in edges:
            if u == v or u not in present or v not in present:
                raise ValueError(f"bad edge {(u, v)}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(round, n, {v: frozenset(nb) for v, nb in adj.items()})


def empty_snapshot(n: int, present: Iterable[int] | None = None) -> Snapshot:
    """The round -1 graph: no edges, nodes ``present`` (default all of ``[0, n)``)."""
    nodes = range(n) if present is None else present
    empty: frozenset[int] = frozenset()
    return Snapshot(-1, n, {v: empty for v in nodes})


def neighborhood(snapshot: Snapshot, v: int) -> frozenset[int]:
    try:
        return snapshot.adj[v]
    except KeyError:
        raise AbsentNode(v) from None


def _check_batch(snapshot: Snapshot, events: list[TopologyEvent]) -> None:
    rnd = snapshot.round + 1
    n = snapshot.n
    adj = snapshot.adj
    touched_edges: set[tuple[int, int]] = set()
    node_events: set[int] = set()
    deleted: set[int] = set()
    for ev in events:
        if ev.round != rnd:
            raise InvalidEvent(ev, f"expected round {rnd}")
        if not 0 <= ev.u < n:
            raise InvalidEvent(ev, "node id out of range")
        if ev.kind.is_edge:
            if ev.v is None or not 0 <= ev.v < n:
                raise InvalidEvent(ev, "node id out of range")
            if ev.edges:
                raise InvalidEvent(ev, "edge list on an edge event")
            if ev.u == ev.v:
                raise InvalidEvent(ev, "self-loop")
            if ev.u not in adj or ev.v not in adj:
                raise InvalidEvent(ev, "unknown endpoint")
            e = ev.edge
            if e in touched_edges:
                raise InvalidEvent(ev, "edge changed twice in one round")
            touched_edges.add(e)
            exists = ev.v in adj[ev.u]
            if ev.kind is EventKind.EDGE_INSERT and exists:
                raise InvalidEvent(ev, "duplicate edge")
            if ev.kind is EventKind.EDGE_DELETE and not exists:
                raise InvalidEvent(ev, "no such edge")
        else:
            if ev.v is not None:
                raise InvalidEvent(ev, "node event carries a second endpoint")
            if ev.u in node_events:
                raise InvalidEvent(ev, "node changed twice in one round")
            node_events.add(ev.u)
            if ev.kind is EventKind.NODE_INSERT:
                if ev.u in adj:
                    raise InvalidEvent(ev, "node already present")
                if len(set(ev.edges)) != len(ev.edges):
                    raise InvalidEvent(ev, "duplicate initial edge")
                for w in ev.edges:
                    if w == ev.u:
                        raise InvalidEvent(ev, "self-loop")
                    if w not in adj:
                        raise InvalidEvent(ev, "unknown endpoint")
            else:
                if ev.edges:
                    raise InvalidEvent(ev, "edge list on a node deletion")
                if ev.u not in adj:
                    raise InvalidEvent(ev, "unknown node")
                deleted.add(ev.u)
    for ev in events:
        if ev.kind.is_edge and (ev.u in deleted or ev.v in deleted):
            raise InvalidEvent(ev, "edge event on a node deleted in the same round")
        if ev.kind is EventKind.NODE_INSERT and deleted.intersection(ev.edges):
            raise InvalidEvent(ev, "initial edge to a node deleted in the same round")


def apply_events(snapshot: Snapshot, events: Iterable[TopologyEvent]) -> tuple[Snapshot, list[Indication]]:
    """Apply one round's changes as a set; return the new snapshot and indications."""
    events = sorted(events, key=TopologyEvent.sort_key)
    rnd = snapshot.round + 1
    if not events:
        return Snapshot(rnd, snapshot.n, snapshot.adj), []
    _check_batch(snapshot, events)

    old = snapshot.adj
    changed: dict[int, set[int]] = {}

    def nb(v: int) -> set[int]:
        s = changed.get(v)
        if s is None:
            s = changed[v] = set(old[v])
        return s

    indications: list[Indication] = []
    removed: set[int] = set()
    for ev in events:
        if ev.kind is EventKind.NODE_DELETE:
            removed.add(ev.u)
            for w in sorted(old[ev.u]):
                if w not in removed:
                    nb(w).discard(ev.u)
                indications.append(Indication(w, ev))
    for ev in events:
        if ev.kind is EventKind.EDGE_INSERT:
            nb(ev.u).add(ev.v)  # type: ignore[arg-type]
            nb(ev.v).add(ev.u)  # type: ignore[arg-type]
        elif ev.kind is EventKind.EDGE_DELETE:
            nb(ev.u).discard(ev.v)  # type: ignore[arg-type]
            nb(ev.v).discard(ev.u)  # type: ignore[arg-type]
        elif ev.kind is EventKind.NODE_INSERT:
            changed[ev.u] = set(ev.edges)
            for w in ev.edges:
                nb(w).add(ev.u)
        if ev.kind.is_edge:
            indications.append(Indication(ev.u, ev))
            indications.append(Indication(ev.v, ev))  # type: ignore[arg-type]
        elif ev.kind is EventKind.NODE_INSERT:
            indications.append(Indication(ev.u, ev))
            indications.extend(Indication(w, ev) for w in ev.edges)

    adj = dict(old)
    for v in removed:
        del adj[v]
        changed.pop(v, None)
    for v, s in changed.items():
        adj[v] = frozenset(s)
    # indications to deleted nodes are dropped (abrupt deletion)
    indications = [ind for ind in indications if ind.node in adj]
    return Snapshot(rnd, snapshot.n, adj), indications


def invert_events(pre: Snapshot, events: Iterable[TopologyEvent], rnd: int) -> list[TopologyEvent]:
    """Events at round ``rnd`` that undo ``events`` (which were applied to ``pre``)."""
    out = []
    for ev in events:
        if ev.kind is EventKind.EDGE_INSERT:
            out.append(TopologyEvent.edge_delete(rnd, ev.u, ev.v))  # type: ignore[arg-type]
        elif ev.kind is EventKind.EDGE_DELETE:
            out.append(TopologyEvent.edge_insert(rnd, ev.u, ev.v))  # type: ignore[arg-type]
        elif ev.kind is EventKind.NODE_INSERT:
            out.append(TopologyEvent.node_delete(rnd, ev.u))
        else:
            out.append(TopologyEvent.node_insert(rnd, ev.u, pre.adj[ev.u]))
    # a deleted node's edges to other deleted nodes cannot be restored through
    # NodeInsert alone; re-add them as edge insertions in a following pass
    return out


def validate_schedule(schedule: Iterable[TopologyEvent], protocol: str,
                      supported: Iterable[EventKind]) -> list[UnsupportedEventKind]:
    allowed = frozenset(supported)
    return [UnsupportedEventKind(protocol, ev.kind, ev) for ev in schedule if ev.kind not in allowed]


# -- schedule file (JSON lines) ------------------------------------------------

_FIELDS = {"round", "op", "u", "v", "edges"}


def _int(obj: dict, key: str, line: int) -> int:
    val = obj[key]
    if not isinstance(val, int) or isinstance(val, bool):
        raise ParseError(line, f"field {key!r} must be an integer")
    if val < 0:
        raise ParseError(line, f"field {key!r} must be non-negative")
    return val


def parse_schedule_line(text: str, line: int = 1) -> TopologyEvent:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(line, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ParseError(line, "expected a JSON object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise ParseError(line, f"unknown fields {sorted(unknown)}")
    for key in ("round", "op", "u"):
        if key not in obj:
            raise ParseError(line, f"missing field {key!r}")
    try:
        kind = EventKind(obj["op"])
    except ValueError:
        raise ParseError(line, f"unknown op {obj['op']!r}") from None
    rnd = _int(obj, "round", line)
    u = _int(obj, "u", line)
    if kind.is_edge:
        if "v" not in obj:
            raise ParseError(line, "edge event needs 'v'")
        if "edges" in obj:
            raise ParseError(line, "'edges' only allowed on v+")
        return TopologyEvent(rnd, kind, u, _int(obj, "v", line))
    if "v" in obj:
        raise ParseError(line, "node event must not carry 'v'")
    if kind is EventKind.NODE_DELETE:
        if "edges" in obj:
            raise ParseError(line, "'edges' only allowed on v+")
        return TopologyEvent.node_delete(rnd, u)
    edges = obj.get("edges", [])
    if not isinstance(edges, list) or any(not isinstance(w, int) or isinstance(w, bool) or w < 0 for w in edges):
        raise ParseError(line, "'edges' must be a list of non-negative integers")
    return TopologyEvent.node_insert(rnd, u, edges)


def parse_schedule(lines: Iterable[str]) -> list[TopologyEvent]:
    events = []
    for i, text in enumerate(lines, start=1):
        if text.strip():
            events.append(parse_schedule_line(text, i))
    return events


def event_to_json(ev: TopologyEvent) -> str:
    obj: dict = {"round": ev.round, "op": ev.kind.value, "u": ev.u}
    if ev.kind.is_edge:
        obj["v"] = ev.v
    elif ev.kind is EventKind.NODE_INSERT and ev.edges:
        obj["edges"] = list(ev.edges)
    return json.dumps(obj)


def dump_schedule(events: Iterable[TopologyEvent], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(event_to_json(ev) + "\n")
