"""(degree+1)- and (Delta+1)-coloring. Colors are positive integers."""

from __future__ import annotations

import random
from typing import Sequence

from ..dyngraph import EventKind, TopologyEvent, UnsupportedEventKind
from ..lfl import DEFAULT, DirtyMark, LflPlugin, LocalView
from ..wire import clog2


def col_prep(v: int, n_old: frozenset, n_new: frozenset, color: int) -> int:
    if len(n_new) < len(n_old):
        return len(n_new) + 1
    return color


def col_fix(v: int, nbrs: Sequence[int], color: int, excerpts: Sequence[int]) -> tuple[int, tuple]:
    taken = set(excerpts)
    c = 1
    while c in taken:
        c += 1
    return c, tuple(excerpts)


def col_dirty_rule(event: TopologyEvent, variant: str = "deg") -> list[DirtyMark]:
    k = event.kind
    both = [DirtyMark(event.u, event.v, k.value), DirtyMark(event.v, event.u, k.value)] if k.is_edge else []  # type: ignore[arg-type]
    if k is EventKind.EDGE_INSERT:
        return both
    if k is EventKind.NODE_INSERT:
        return [DirtyMark(event.u, event.u, k.value)]
    if variant == "deg":
        if k is EventKind.EDGE_DELETE:
            return both
        raise UnsupportedEventKind("coloring-deg", k, event)
    return []


class _Coloring(LflPlugin):
    insertion_closed = True
    edge_excerpt_bits = 0

    def node_excerpt(self, v, label):
        return label

    def edge_excerpt(self, v, label, u):
        return DEFAULT

    def edge_correct(self, v, u, lvv, lvu, luv, luu):
        return lvu == luv and lvv != luu

    def fix(self, v, nbrs, label, excerpts):
        return col_fix(v, nbrs, label, excerpts)

    def apply_delta(self, u, label, v, edge_exc, beta):
        return beta

    def encode_node_excerpt(self, x):
        return x


class DegreeColoring(_Coloring):
    name = "coloring-deg"
    supported = frozenset({EventKind.EDGE_INSERT, EventKind.EDGE_DELETE, EventKind.NODE_INSERT})

    def __init__(self, n: int):
        super().__init__(n)
        self.node_excerpt_bits = clog2(n + 1)

    def initial_label(self, v, nbrs):
        return len(nbrs) + 1

    def prepared(self, v, nbrs, label):
        return 1 <= label <= len(nbrs) + 1

    def prep(self, v, n_old, n_new, label):
        return col_prep(v, n_old, n_new, label)

    def dirty_rule(self, event, view):
        return col_dirty_rule(event, "deg")

    def random_labeling(self, rng: random.Random, adj):
        return {v: rng.randint(1, len(nb) + 1) for v, nb in adj.items()}


class DeltaColoring(_Coloring):
    name = "coloring-delta"
    supported = frozenset(EventKind)

    def __init__(self, n: int, delta: int | None = None):
        super().__init__(n)
        self.delta = n - 1 if delta is None else delta
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        self.node_excerpt_bits = clog2(self.delta + 2)

    def initial_label(self, v, nbrs):
        return min(len(nbrs), self.delta) + 1

    def prepared(self, v, nbrs, label):
        return 1 <= label <= self.delta + 1

    def prep(self, v, n_old, n_new, label):
        return label

    def dirty_rule(self, event, view):
        return col_dirty_rule(event, "delta")

    def random_labeling(self, rng: random.Random, adj):
        return {v: rng.randint(1, self.delta + 1) for v in adj}
