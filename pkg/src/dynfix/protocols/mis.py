"""Maximal independent set with the small-label dirty-marking rules.

Labels are booleans (True = in the set). Neighbors are never relabeled by
a fixer; instead a node leaving the set makes undominated false neighbors
dirty, and a node joining the set clears its dirty neighbors.
"""

from __future__ import annotations

import random
from typing import Sequence

from ..dyngraph import EventKind, TopologyEvent
from ..lfl import DEFAULT, DirtyMark, LflPlugin, LocalView

# origins that may flip a node from True to False, and origins that must
# be charged to such a flip
FLIP_ORIGINS = frozenset({"item2", "item3"})
BLAMED_ORIGINS = frozenset({"item4", "item5"})


def mis_fix(v: int, nbrs: Sequence[int], label: bool, excerpts: Sequence[bool]) -> tuple[bool, tuple]:
    return (not any(excerpts)), tuple(excerpts)


def _undominated(z: int, view: LocalView) -> bool:
    return not view.label(z) and not any(view.label(x) for x in view.nbrs(z))


def mis_dirty_rule(event: TopologyEvent, view: LocalView) -> list[DirtyMark]:
    k = event.kind
    if k is EventKind.EDGE_DELETE:
        u, v = event.u, event.v
        lu, lv = view.label(u), view.label(v)
        if lu != lv:
            z = v if lu else u
            return [DirtyMark(z, u if z == v else v, "item1")]
        return []
    if k is EventKind.EDGE_INSERT:
        u, v = event.u, event.v
        if view.label(u) and view.label(v):
            lo, hi = min(u, v), max(u, v)  # type: ignore[type-var]
            return [DirtyMark(lo, hi, "item2")]
        return []
    if k is EventKind.NODE_INSERT:
        return [DirtyMark(event.u, event.u, "item3")]
    return [DirtyMark(z, event.u, "item4") for z in sorted(view.old_nbrs(event.u))
            if view.is_present(z) and _undominated(z, view)]


def mis_post_fix(v: int, old: bool, new: bool, view: LocalView, origin: str) -> tuple[list[int], list[int]]:
    """(extra dirty, extra clean) after ``v`` fixed its label.

    An inserted node that keeps its initial True label counts as joining.
    """
    if old and not new:
        return [z for z in sorted(view.nbrs(v)) if _undominated(z, view)], []
    if new and (not old or origin == "item3"):
        return [], [z for z in sorted(view.nbrs(v)) if view.is_dirty(z)]
    return [], []


class MaximalIndependentSet(LflPlugin):
    name = "mis"
    insertion_closed = True
    supported = frozenset(EventKind)
    node_excerpt_bits = 1
    edge_excerpt_bits = 0

    def initial_label(self, v, nbrs):
        return True

    def node_excerpt(self, v, label):
        return label

    def edge_excerpt(self, v, label, u):
        return DEFAULT

    def prepared(self, v, nbrs, label):
        return isinstance(label, bool)

    def edge_correct(self, v, u, lvv, lvu, luv, luu):
        return lvu == luv and not (lvv and luu)

    def star_ok(self, v, label, nbr_excerpts):
        return label or any(nbr_excerpts.values())

    def prep(self, v, n_old, n_new, label):
        return label

    def fix(self, v, nbrs, label, excerpts):
        return mis_fix(v, nbrs, label, excerpts)

    def apply_delta(self, u, label, v, edge_exc, beta):
        return beta

    def dirty_rule(self, event, view):
        return mis_dirty_rule(event, view)

    def post_fix(self, v, old, new, view, origin):
        return mis_post_fix(v, old, new, view, origin)

    def encode_node_excerpt(self, x):
        return int(x)

    def random_labeling(self, rng: random.Random, adj):
        return {v: rng.random() < 0.5 for v in adj}
