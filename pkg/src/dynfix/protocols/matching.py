"""Maximal matching: a label is the matched neighbor's id, or None when unmatched."""

from __future__ import annotations

import random
from typing import Sequence

from ..dyngraph import EventKind, TopologyEvent
from ..lfl import DEFAULT, DirtyMark, LflPlugin, LocalView
from ..wire import clog2

Unmatched = None


def mm_prep(v: int, n_old: frozenset, n_new: frozenset, label: int | None) -> int | None:
    return label if label is not None and label in n_new else None


def mm_fix(v: int, nbrs: Sequence[int], label: int | None,
           excerpts: Sequence[int | None]) -> tuple[int | None, tuple]:
    betas = tuple(excerpts)
    if label is not None:
        return label, betas
    for i, x in enumerate(excerpts):
        if x is None:
            out = list(betas)
            out[i] = v
            return nbrs[i], tuple(out)
    return None, betas


def mm_dirty_rule(event: TopologyEvent, view: LocalView) -> list[DirtyMark]:
    k = event.kind
    if k.is_edge:
        return [DirtyMark(event.u, event.v, k.value), DirtyMark(event.v, event.u, k.value)]  # type: ignore[arg-type]
    if k is EventKind.NODE_INSERT:
        return [DirtyMark(event.u, event.u, k.value)]
    return [DirtyMark(w, event.u, k.value) for w in sorted(view.old_nbrs(event.u))
            if view.is_present(w) and view.label(w) == event.u]


class MaximalMatching(LflPlugin):
    name = "mm"
    insertion_closed = True
    supported = frozenset(EventKind)
    edge_excerpt_bits = 1

    def __init__(self, n: int):
        super().__init__(n)
        self.node_excerpt_bits = clog2(n + 1)

    def initial_label(self, v, nbrs):
        return None

    def node_excerpt(self, v, label):
        return label

    def edge_excerpt(self, v, label, u):
        return True if label == u else DEFAULT

    def prepared(self, v, nbrs, label):
        return label is None or label in nbrs

    def edge_correct(self, v, u, lvv, lvu, luv, luu):
        return lvu == luv and (lvv is not None or luu is not None)

    def prep(self, v, n_old, n_new, label):
        return mm_prep(v, n_old, n_new, label)

    def fix(self, v, nbrs, label, excerpts):
        return mm_fix(v, nbrs, label, excerpts)

    def apply_delta(self, u, label, v, edge_exc, beta):
        return beta

    def dirty_rule(self, event, view):
        return mm_dirty_rule(event, view)

    def encode_node_excerpt(self, x):
        return self.n if x is None else x

    def encode_edge_excerpt(self, x):
        return 1 if x is True else 0

    def random_labeling(self, rng: random.Random, adj):
        labels: dict[int, int | None] = {v: None for v in adj}
        edges = [(u, w) for u in adj for w in adj[u] if u < w]
        rng.shuffle(edges)
        for u, w in edges:
            if labels[u] is None and labels[w] is None and rng.random() < 0.5:
                labels[u], labels[w] = w, u
        return labels
