import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynfix.dyngraph import (
    AbsentNode,
    EventKind,
    InvalidEvent,
    ParseError,
    Snapshot,
    TopologyEvent,
    UnsupportedEventKind,
    apply_events,
    empty_snapshot,
    event_to_json,
    invert_events,
    neighborhood,
    parse_schedule,
    parse_schedule_line,
    validate_schedule,
)

from strategies import graphs, valid_batch

E = TopologyEvent


def at(snap, rnd):
    return Snapshot(rnd - 1, snap.n, snap.adj)


def test_single_edge_insert():
    snap, inds = apply_events(empty_snapshot(4), [E.edge_insert(0, 0, 1)])
    assert snap.edges == {(0, 1)}
    assert sorted(i.node for i in inds) == [0, 1]
    assert snap.round == 0


def test_abrupt_node_delete_on_path():
    path = at(Snapshot.from_edges(3, [(0, 1), (1, 2)]), 5)
    snap, inds = apply_events(path, [E.node_delete(5, 1)])
    assert snap.nodes == {0, 2}
    assert snap.edges == frozenset()
    assert sorted(i.node for i in inds) == [0, 2]
    assert all(i.other == 1 for i in inds)


def test_simultaneous_deletions_in_one_round():
    tri = at(Snapshot.from_edges(3, [(0, 1), (1, 2), (0, 2)]), 1)
    snap, inds = apply_events(tri, [E.edge_delete(1, 0, 1), E.edge_delete(1, 1, 2)])
    assert snap.edges == {(0, 2)}
    assert [i.node for i in inds].count(1) == 2


def test_node_insert_indicates_node_and_neighbors():
    base = at(empty_snapshot(5, present=[0, 1, 2]), 0)
    snap, inds = apply_events(base, [E.node_insert(0, 4, [0, 2])])
    assert snap.adj[4] == {0, 2}
    assert snap.adj[0] == {4}
    assert sorted(i.node for i in inds) == [0, 2, 4]


def test_neighborhood_queries():
    tri = Snapshot.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert neighborhood(tri, 0) == {1, 2}
    assert neighborhood(empty_snapshot(2), 1) == frozenset()
    after, _ = apply_events(tri, [E.edge_delete(0, 0, 1)])
    assert neighborhood(after, 0) == {2}
    with pytest.raises(AbsentNode):
        neighborhood(empty_snapshot(3, present=[0]), 2)


@pytest.mark.parametrize("events, reason", [
    ([E.edge_insert(0, 0, 0)], "self-loop"),
    ([E.edge_insert(0, 0, 9)], "range"),
    ([E.edge_delete(0, 0, 1)], "no such edge"),
    ([E.edge_insert(0, 0, 1), E.edge_delete(0, 0, 1)], "twice"),
    ([E.node_insert(0, 1)], "already present"),
    ([E.node_delete(0, 2), E.edge_insert(0, 2, 3)], "deleted in the same round"),
    ([E.edge_insert(3, 0, 1)], "expected round"),
])
def test_invalid_batches(events, reason):
    with pytest.raises(InvalidEvent, match=reason):
        apply_events(empty_snapshot(4), events)


def test_validate_schedule_by_protocol():
    sched = [E.edge_insert(0, 0, 1), E.node_delete(3, 1)]
    bad = validate_schedule(sched, "mwvc", {EventKind.EDGE_INSERT, EventKind.EDGE_DELETE, EventKind.NODE_INSERT})
    assert len(bad) == 1 and isinstance(bad[0], UnsupportedEventKind)
    assert bad[0].kind is EventKind.NODE_DELETE
    assert validate_schedule(sched, "mis", set(EventKind)) == []


def test_schedule_line_round_trip():
    for ev in (E.edge_insert(3, 1, 2), E.edge_delete(0, 4, 0), E.node_insert(7, 3, [1, 2]), E.node_delete(2, 5)):
        assert parse_schedule_line(event_to_json(ev)) == ev


@pytest.mark.parametrize("line", [
    "not json",
    '{"round": 1, "op": "e+", "u": 0}',
    '{"round": 1, "op": "v-", "u": 0, "v": 2}',
    '{"round": -1, "op": "e+", "u": 0, "v": 1}',
    '{"round": 1, "op": "zz", "u": 0}',
    '{"round": 1, "op": "e+", "u": 0, "v": 1, "extra": 3}',
    '{"round": true, "op": "v-", "u": 0}',
])
def test_malformed_lines(line):
    with pytest.raises(ParseError):
        parse_schedule_line(line, 4)


def test_parse_error_reports_line():
    lines = [json.dumps({"round": 0, "op": "e+", "u": 0, "v": 1}), "", "{"]
    with pytest.raises(ParseError) as info:
        parse_schedule(lines)
    assert info.value.line == 3


@given(graphs(max_n=7), st.data())
def test_batch_application_is_symmetric_and_indicates_every_incidence(g, data):
    snap = at(g, 0)
    batch = data.draw(valid_batch(snap))
    post, inds = apply_events(snap, batch)
    for v, nb in post.adj.items():
        assert v not in nb
        for u in nb:
            assert v in post.adj[u]
    nodes = {i.node for i in inds}
    for ev in batch:
        if ev.kind.is_edge:
            assert {ev.u, ev.v} <= nodes
        elif ev.kind is EventKind.NODE_DELETE:
            assert ev.u not in post.adj
            assert set(snap.adj[ev.u]) - {e.u for e in batch if e.kind is EventKind.NODE_DELETE} <= nodes
    assert all(i.node in post.adj for i in inds)


@given(graphs(max_n=6), st.data())
def test_invert_restores_edge_changes(g, data):
    snap = at(g, 0)
    batch = [e for e in data.draw(valid_batch(snap)) if e.kind.is_edge]
    post, _ = apply_events(snap, batch)
    back, _ = apply_events(post, invert_events(snap, batch, 1))
    assert back.edges == snap.edges and back.nodes == snap.nodes
