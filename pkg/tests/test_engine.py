import random
from itertools import groupby

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynfix.adversary import RandomChurn, ScheduleSpec, generate
from dynfix.dyngraph import Snapshot, TopologyEvent
from dynfix.engine import (
    MSG_FIX_DELTA,
    MSG_HASHED_TS,
    MSG_NODE_EXCERPT,
    BitBudgetExceeded,
    DegreeBoundExceeded,
    Engine,
    encode_message,
)
from dynfix.lfl import DEFAULT
from dynfix.mm_direct import DirectMatching
from dynfix.protocols import make_plugin
from dynfix.protocols.matching import MaximalMatching
from dynfix.protocols.vertex_cover import VcLabel
from dynfix.timestamp import GammaConfig, HashedTimestamp, Timestamp
from dynfix.wire import bit_budget

E = TopologyEvent
G = 5


def engine_at_epoch(protocol, n, edges, labels=None, dirty=(), epoch=1, **kw):
    """Engine positioned at the first round of ``epoch`` with the given dirty owners."""
    snap = Snapshot.from_edges(n, edges, round=G * epoch - 1)
    eng = Engine(make_plugin(protocol, n, **kw), n, G, initial=snap, labels=labels)
    for i, v in enumerate(dirty):
        other = next(iter(snap.adj[v]), v)
        eng.ts[v] = Timestamp(G * epoch - 2, v, other)
        eng.origin[v] = "test"
    return eng


def run_epoch(eng, events=None):
    events = events or {}
    return [eng.step(events.get(o, ())) for o in range(G)]


def test_phase_schedule():
    eng = Engine(make_plugin("mm", 3), 3, 6)
    phases = [eng.step().phase for _ in range(12)]
    assert phases[6:] == ["prep", "propagate", "propagate", "propagate", "wait", "fix"]


def test_single_dirty_node_becomes_active():
    path = [(0, 1), (1, 2)]
    eng = engine_at_epoch("mm", 3, path, {0: None, 1: 2, 2: 1}, dirty=[0])
    stats = run_epoch(eng)
    assert stats[3].actives == 1
    assert eng.labels == {0: None, 1: 2, 2: 1}
    assert not eng.ts


def test_adjacent_dirty_nodes_only_smaller_is_active():
    eng = engine_at_epoch("mm", 2, [(0, 1)], {0: None, 1: None}, dirty=[0, 1])
    run_epoch(eng)
    assert eng.labels == {0: 1, 1: 0}
    assert list(eng.ts) == [1]


def test_distance_four_both_active():
    path = [(i, i + 1) for i in range(4)]
    labels = {0: None, 1: 2, 2: 1, 3: 4, 4: 3}
    eng = engine_at_epoch("mm", 5, path, labels, dirty=[0, 4])
    for _ in range(4):
        eng.step()
    assert eng.active == [0, 4]


def test_distance_three_only_one_active():
    path = [(i, i + 1) for i in range(3)]
    eng = engine_at_epoch("mm", 4, path, {0: None, 1: 2, 2: 1, 3: None}, dirty=[0, 3])
    for _ in range(4):
        eng.step()
    assert eng.active == [0]


def test_clique_of_three_one_active():
    tri = [(0, 1), (1, 2), (0, 2)]
    eng = engine_at_epoch("coloring-deg", 3, tri, {0: 1, 1: 1, 2: 1}, dirty=[2, 1, 0])
    for _ in range(4):
        eng.step()
    assert eng.active == [0]


def test_mm_fix_matches_unmatched_pair():
    eng = engine_at_epoch("mm", 3, [(0, 1), (1, 2)], {0: None, 1: None, 2: None}, dirty=[1])
    stats = run_epoch(eng)
    assert eng.labels == {0: 1, 1: 0, 2: None}
    assert stats[4].messages == 2
    assert stats[4].max_message_bits == 2 + 1 + 2 * 2


def test_tainted_active_aborts_and_stays_dirty():
    eng = engine_at_epoch("mm", 4, [(0, 1)], {0: None, 1: None, 2: None, 3: None}, dirty=[0])
    before = dict(eng.labels)
    stats = run_epoch(eng, {2: [E.edge_insert(7, 0, 2)]})
    assert stats[4].aborted == 1
    assert eng.labels == before
    assert eng.ts[0] == Timestamp(7, 0, 2)
    assert 0 in eng.dirty_set()


def test_quiescent_engine_is_silent():
    eng = Engine(make_plugin("mis", 6), 6)
    for _ in range(30):
        assert eng.step().messages == 0
    assert eng.is_quiescent()


def test_dirty_set_algebra_after_clean_epoch():
    eng = engine_at_epoch("mm", 4, [(0, 1), (1, 2)], {0: None, 1: 2, 2: 1, 3: None}, dirty=[0])
    d_before = len(eng.ts)
    run_epoch(eng, {1: [E.edge_insert(6, 2, 3)]})
    # fixer 0 leaves; the indicated endpoints 2 and 3 join
    assert eng.dirty_set() == {2, 3}
    assert len(eng.ts) == d_before - 1 + len(eng.indicated)


def test_vertex_cover_prep_revokes_deleted_dual():
    w = [5, 5, 5]
    labels = {0: VcLabel.make(3, {1: 2}), 1: VcLabel.make(3, {0: 2}), 2: VcLabel(5)}
    eng = engine_at_epoch("mwvc", 3, [(0, 1)], labels, weights=w)
    eng.step([E.edge_delete(5, 0, 1)])
    assert eng.labels[0] == VcLabel(5)
    assert eng.labels[1] == VcLabel(5)


def test_untouched_node_excerpt_still_broadcast():
    eng = engine_at_epoch("mm", 3, [(0, 1), (1, 2)], {0: None, 1: 2, 2: 1}, dirty=[0])
    st = eng.step()
    assert st.messages == 4  # every node to every neighbor
    assert eng.labels[2] == 1


def test_budget_enforced():
    class Wide(MaximalMatching):
        node_excerpt_bits = 500

        def __init__(self, n):
            super().__init__(n)
            self.node_excerpt_bits = 500

    with pytest.raises(BitBudgetExceeded):
        Engine(Wide(4), 4)


def test_degree_bound_enforced():
    eng = Engine(make_plugin("coloring-delta", 4, delta=1), 4)
    eng.step([E.edge_insert(0, 0, 1)])
    with pytest.raises(DegreeBoundExceeded):
        eng.step([E.edge_insert(1, 0, 2)])


@pytest.mark.parametrize("n", [2, 16, 64, 1000])
def test_message_encodings_fit_budget(n):
    cfg = GammaConfig(n)
    mm = make_plugin("mm", n)
    value, width = encode_message(MSG_HASHED_TS, (HashedTimestamp(cfg.modulus - 1, n - 1, n - 1),), mm, cfg)
    assert width == 2 + cfg.h_bits + 2 * cfg.id_bits <= bit_budget(n)
    assert value >> (width - 2) == MSG_HASHED_TS
    value, width = encode_message(MSG_FIX_DELTA, (True, n - 1, None), mm, cfg)
    assert width == 2 + 1 + 2 * mm.node_excerpt_bits <= bit_budget(n)
    value, width = encode_message(MSG_NODE_EXCERPT, (None,), mm, cfg)
    assert value == (MSG_NODE_EXCERPT << mm.node_excerpt_bits) | n


def test_fix_delta_payload_layout():
    cfg = GammaConfig(4)
    mm = make_plugin("mm", 4)  # node excerpt 3 bits, edge excerpt 1 bit
    value, width = encode_message(MSG_FIX_DELTA, (DEFAULT, 2, 4), mm, cfg)
    assert width == 9
    assert value == 0b10_0_010_100


def _trace(stepper, batches, horizon):
    return [stepper(batches.get(r, ())) for r in range(horizon)]


@settings(max_examples=25)
@given(st.sampled_from([4, 8, 16]), st.sampled_from([1, 3, 8]), st.integers(0, 10**6))
def test_generic_engine_matches_specialized_matching(n, rate, seed):
    events = generate(ScheduleSpec(n, 60, seed, RandomChurn(rate, protocol="mm")))
    batches = {r: list(b) for r, b in groupby(events, key=lambda e: e.round)}
    eng, direct = Engine(make_plugin("mm", n), n), DirectMatching(n)
    horizon = 60 + 6 * n + 5
    assert _trace(eng.step, batches, horizon) == _trace(direct.step, batches, horizon)
    assert eng.labels == direct.labels()


def test_engine_is_deterministic():
    rng = random.Random(5)
    events = generate(ScheduleSpec(16, 80, rng.randrange(10**6), RandomChurn(6, protocol="mis")))
    batches = {r: list(b) for r, b in groupby(events, key=lambda e: e.round)}
    runs = []
    for _ in range(2):
        eng = Engine(make_plugin("mis", 16), 16)
        runs.append((_trace(eng.step, batches, 200), eng.labels))
    assert runs[0] == runs[1]


def test_neighbor_deleted_and_reinserted_between_preps():
    # 1 leaves and comes back as a fresh unmatched node before 0's next prep
    sched = {0: [E.edge_insert(0, 0, 1)], 21: [E.node_delete(21, 1)], 23: [E.node_insert(23, 1, [0])]}
    eng, direct = Engine(make_plugin("mm", 2), 2), DirectMatching(2)
    for r in range(60):
        assert eng.step(sched.get(r, ())) == direct.step(sched.get(r, ()))
        if r == 19:
            assert eng.labels == {0: 1, 1: 0}
        if r == 25:
            assert eng.labels[0] is None and direct.labels()[0] is None
    assert eng.labels == direct.labels() == {0: 1, 1: 0}
    assert not eng.ts
