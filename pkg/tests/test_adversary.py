import json
from itertools import groupby

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynfix.adversary import (
    DEFAULT_MIX,
    SUPPORTED_KINDS,
    InfeasibleSpec,
    Pattern,
    RandomChurn,
    Replay,
    ScheduleSpec,
    check_applicable,
    generate,
    replay,
)
from dynfix.dyngraph import EventKind, ParseError, TopologyEvent, event_to_json, validate_schedule
from dynfix.engine import Engine
from dynfix.protocols import PROTOCOLS, make_plugin
from dynfix.simulation import RunConfig, simulate

E = TopologyEvent


def test_zero_rate_is_empty():
    assert generate(ScheduleSpec(8, 100, 1, RandomChurn(0))) == []


def test_same_seed_same_schedule():
    spec = ScheduleSpec(16, 120, 42, RandomChurn(5))
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(ScheduleSpec(16, 120, 43, RandomChurn(5)))


@settings(max_examples=40)
@given(st.sampled_from(PROTOCOLS), st.sampled_from([2, 5, 8, 16]), st.integers(1, 25), st.integers(0, 10**6))
def test_churn_is_applicable_and_supported(protocol, n, rate, seed):
    rate = min(rate, n * (n - 1) // 2)
    events = generate(ScheduleSpec(n, 40, seed, RandomChurn(rate, protocol=protocol)))
    check_applicable(events, n)
    assert validate_schedule(events, protocol, SUPPORTED_KINDS[protocol]) == []
    for _, batch in groupby(events, key=lambda e: e.round):
        assert len(list(batch)) <= rate
    assert [e.round for e in events] == sorted(e.round for e in events)


def test_churn_respects_degree_bound():
    events = generate(ScheduleSpec(12, 200, 3, RandomChurn(6, protocol="coloring-delta", max_degree=3)))
    snap = check_applicable(events, 12)
    assert max((len(nb) for nb in snap.adj.values()), default=0) <= 3


def test_rate_beyond_edge_supply_is_infeasible():
    mix = {EventKind.EDGE_INSERT: 1.0, EventKind.EDGE_DELETE: 1.0}
    with pytest.raises(InfeasibleSpec):
        generate(ScheduleSpec(4, 10, 0, RandomChurn(7, mix=mix)))
    with pytest.raises(InfeasibleSpec):
        generate(ScheduleSpec(4, 10, 0, RandomChurn(1, mix={EventKind.NODE_DELETE: 1.0}, protocol="mwvc")))


def test_default_mix_has_every_kind():
    assert set(DEFAULT_MIX) == set(EventKind)


def test_replay_sorts_and_validates(tmp_path):
    path = tmp_path / "s.jsonl"
    lines = [E.edge_insert(3, 0, 2), E.edge_insert(0, 0, 1), E.edge_delete(5, 0, 1)]
    path.write_text("\n".join(event_to_json(e) for e in lines) + "\n")
    out = replay(path)
    assert [e.round for e in out] == [0, 3, 5]
    assert generate(ScheduleSpec(3, 4, 0, Replay(str(path)))) == out[:2]


def test_replay_reports_bad_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps({"round": 0, "op": "e+", "u": 0, "v": 1}) + "\n{oops\n")
    with pytest.raises(ParseError):
        replay(path)


def test_unknown_pattern():
    with pytest.raises(InfeasibleSpec):
        generate(ScheduleSpec(8, 10, 0, Pattern("nope")))


def test_matched_edge_churn_hits_the_matched_edge():
    n, hub = 8, 0
    events = generate(ScheduleSpec(n, 300, 0, Pattern("matched-edge-churn", {"node": hub})))
    check_applicable(events, n)
    eng = Engine(make_plugin("mm", n), n)
    batches = {r: list(b) for r, b in groupby(events, key=lambda e: e.round)}
    hits = 0
    for r in range(300):
        batch = batches.get(r, ())
        for ev in batch:
            if ev.kind is EventKind.EDGE_DELETE:
                assert hub in ev.edge and eng.labels[hub] in ev.edge
                hits += 1
        eng.step(batch)
    assert hits >= 5


def test_mis_cascade_fans_out_neighbor_activations():
    n = 16
    events = generate(ScheduleSpec(n, 10**5, 0, Pattern("mis-cascade")))
    check_applicable(events, n)
    res = simulate(RunConfig("mis", n, keep_trace=False), events)
    blame = res.summary["blame"]
    assert blame["charged"] >= (n - 2) // 2
    assert blame["injective"]
    assert res.summary["max_ratio"] <= 10
    assert not res.violations


def test_mis_cascade_needs_room():
    with pytest.raises(InfeasibleSpec):
        generate(ScheduleSpec(3, 100, 0, Pattern("mis-cascade")))
