"""2-approximate minimum weight vertex cover via edge duals.

A label holds the node's remaining weight (node excerpt) and the dual on
each incident edge (edge excerpts, 0 for non-neighbors). The cover is the
set of nodes whose remaining weight is 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..dyngraph import EventKind, TopologyEvent, UnsupportedEventKind
from ..lfl import DirtyMark, LflPlugin
from ..wire import clog2


class PostconditionViolated(AssertionError):
    pass


@dataclass(frozen=True)
class VcLabel:
    remaining: int
    duals: tuple[tuple[int, int], ...] = ()

    def dual(self, u: int) -> int:
        for w, d in self.duals:
            if w == u:
                return d
        return 0

    def dual_map(self) -> dict[int, int]:
        return dict(self.duals)

    @classmethod
    def make(cls, remaining: int, duals: Mapping[int, int]) -> VcLabel:
        return cls(remaining, tuple(sorted((u, d) for u, d in duals.items() if d)))


def vc_prepared(v: int, nbrs: frozenset, label: VcLabel, w: int) -> bool:
    if not 0 <= label.remaining <= w:
        return False
    total = label.remaining
    for u, d in label.duals:
        if d < 0 or u not in nbrs:
            return False
        total += d
    return total == w


def vc_prep(v: int, n_old: frozenset, n_new: frozenset, label: VcLabel) -> VcLabel:
    affected = n_old ^ n_new
    if not affected:
        return label
    duals = label.dual_map()
    remaining = label.remaining
    for u in affected:
        remaining += duals.pop(u, 0)
    return VcLabel.make(remaining, duals)


def vc_fix(v: int, nbrs: Sequence[int], label: VcLabel, excerpts: Sequence[int],
           w: int | None = None) -> tuple[VcLabel, tuple]:
    r = label.remaining
    duals = label.dual_map()
    betas = []
    for u, ru in zip(nbrs, excerpts):
        t = min(ru, r)
        r -= t
        if t:
            duals[u] = duals.get(u, 0) + t
        betas.append(ru - t)
    new = VcLabel.make(r, duals)
    # P1/P2 at v, P3 at v
    if r < 0 or any(b < 0 for b in betas):
        raise PostconditionViolated(f"negative remaining weight at {v}")
    if w is not None and r + sum(duals.values()) != w:
        raise PostconditionViolated(f"weight not conserved at {v}")
    if r != 0 and any(betas):
        raise PostconditionViolated(f"neither {v} nor all its neighbors are tight")
    return new, tuple(betas)


class VertexCover(LflPlugin):
    name = "mwvc"
    insertion_closed = True
    supported = frozenset({EventKind.EDGE_INSERT, EventKind.EDGE_DELETE, EventKind.NODE_INSERT})

    def __init__(self, n: int, weights: Mapping[int, int] | Sequence[int] | None = None, seed: int = 0):
        super().__init__(n)
        if weights is None:
            rng = random.Random(seed)
            weights = [rng.randint(1, max(1, n ** 3)) for _ in range(n)]
        if isinstance(weights, Mapping):
            missing = [v for v in range(n) if v not in weights]
            if missing:
                raise ValueError(f"no weight for nodes {missing[:5]}")
            weights = [weights[v] for v in range(n)]
        self.weights = list(weights)
        if any(not isinstance(x, int) or x < 1 for x in self.weights):
            raise ValueError("weights must be positive integers")
        top = max(self.weights, default=1)
        self.node_excerpt_bits = clog2(top + 1)
        self.edge_excerpt_bits = self.node_excerpt_bits

    def initial_label(self, v, nbrs):
        return VcLabel(self.weights[v])

    def node_excerpt(self, v, label):
        return label.remaining

    def edge_excerpt(self, v, label, u):
        return label.dual(u)

    def prepared(self, v, nbrs, label):
        return vc_prepared(v, nbrs, label, self.weights[v])

    def edge_correct(self, v, u, lvv, lvu, luv, luu):
        return lvu == luv and (lvv == 0 or luu == 0)

    def prep(self, v, n_old, n_new, label):
        return vc_prep(v, n_old, n_new, label)

    def fix(self, v, nbrs, label, excerpts):
        return vc_fix(v, nbrs, label, excerpts, self.weights[v])

    def apply_delta(self, u, label, v, edge_exc, beta):
        duals = label.dual_map()
        duals[v] = edge_exc
        return VcLabel.make(beta, duals)

    def dirty_rule(self, event, view):
        return vc_dirty_rule(event)

    def encode_node_excerpt(self, x):
        return x

    def encode_edge_excerpt(self, x):
        return x

    def label_to_json(self, label):
        return {"remaining": label.remaining, "duals": {str(u): d for u, d in label.duals}}

    def label_from_json(self, obj):
        return VcLabel.make(obj["remaining"], {int(u): d for u, d in obj.get("duals", {}).items()})

    def random_labeling(self, rng: random.Random, adj):
        avail = {v: self.weights[v] for v in adj}
        duals: dict[int, dict[int, int]] = {v: {} for v in adj}
        edges = [(u, w) for u in adj for w in adj[u] if u < w]
        rng.shuffle(edges)
        for u, w in edges:
            cap = min(avail[u], avail[w])
            d = rng.choice([0, cap, rng.randint(0, cap)])
            if d:
                duals[u][w] = d
                duals[w][u] = d
                avail[u] -= d
                avail[w] -= d
        return {v: VcLabel.make(avail[v], duals[v]) for v in adj}


def cover_weight(labels: Mapping[int, VcLabel], weights: Sequence[int]) -> int:
    return sum(weights[v] for v, lab in labels.items() if lab.remaining == 0)


def vc_dirty_rule(event: TopologyEvent) -> list[DirtyMark]:
    k = event.kind
    if k.is_edge:
        return [DirtyMark(event.u, event.v, k.value), DirtyMark(event.v, event.u, k.value)]  # type: ignore[arg-type]
    if k is EventKind.NODE_INSERT:
        return [DirtyMark(event.u, event.u, k.value)]
    raise UnsupportedEventKind("mwvc", k, event)
