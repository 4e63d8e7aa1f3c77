"""Hypothesis strategies for graphs and round-batched schedules."""

from hypothesis import strategies as st

from dynfix.dyngraph import Snapshot, TopologyEvent


@st.composite
def graphs(draw, max_n=8, min_n=1):
    n = draw(st.integers(min_n, max_n))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Snapshot.from_edges(n, edges)


@st.composite
def valid_batch(draw, snap: Snapshot, max_events=6):
    """A conflict-free set of events applicable to ``snap``."""
    rnd = snap.round + 1
    present = sorted(snap.adj)
    absent = [v for v in range(snap.n) if v not in snap.adj]
    busy_nodes, busy_edges, out = set(), set(), []
    for _ in range(draw(st.integers(0, max_events))):
        kind = draw(st.sampled_from(["e+", "e-", "v+", "v-"]))
        if kind in ("e+", "e-") and len(present) >= 2:
            a, b = draw(st.lists(st.sampled_from(present), min_size=2, max_size=2, unique=True))
            e = (min(a, b), max(a, b))
            if e in busy_edges or a in busy_nodes or b in busy_nodes:
                continue
            has = snap.has_edge(a, b)
            if kind == "e+" and not has:
                out.append(TopologyEvent.edge_insert(rnd, *e))
            elif kind == "e-" and has:
                out.append(TopologyEvent.edge_delete(rnd, *e))
            else:
                continue
            busy_edges.add(e)
        elif kind == "v+" and absent:
            v = draw(st.sampled_from(absent))
            if v in busy_nodes:
                continue
            free = [w for w in present if w not in busy_nodes]
            nb = draw(st.lists(st.sampled_from(free), unique=True, max_size=3)) if free else []
            out.append(TopologyEvent.node_insert(rnd, v, sorted(nb)))
            busy_nodes.add(v)
            busy_nodes.update(nb)
        elif kind == "v-" and present:
            v = draw(st.sampled_from(present))
            if v in busy_nodes or any(v in e for e in busy_edges):
                continue
            out.append(TopologyEvent.node_delete(rnd, v))
            busy_nodes.add(v)
    return out
