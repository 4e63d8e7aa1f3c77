"""Plugin contract for locally fixable labelings, plus contract checkers.

A label is an opaque, hashable value owned by one node. The plugin exposes
its excerpts: one node excerpt, and one edge excerpt per other node (the
``DEFAULT`` excerpt for non-neighbors). Only excerpts cross the wire.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Mapping, Protocol, Sequence

from .dyngraph import EventKind, TopologyEvent

__all__ = [
    "DEFAULT",
    "DirtyMark",
    "LocalView",
    "LflPlugin",
    "PrepViolation",
    "FixViolation",
    "PreconditionFailed",
    "check_prep_contract",
    "check_fix_contract",
    "view_consistent",
    "fuzz_prep",
    "fuzz_fix",
]


class _Default:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "DEFAULT"

    def __reduce__(self):
        return (_Default, ())


DEFAULT = _Default()

Label = Hashable
Adjacency = Mapping[int, frozenset]


@dataclass(frozen=True)
class DirtyMark:
    """A node the dirty rule marks: its timestamp is (round, owner, other)."""

    owner: int
    other: int
    origin: str


class LocalView(Protocol):
    """What a dirty rule may look at when an event is applied."""

    def label(self, v: int) -> Label: ...

    def nbrs(self, v: int) -> frozenset: ...

    def old_nbrs(self, v: int) -> frozenset: ...

    def is_dirty(self, v: int) -> bool: ...

    def is_present(self, v: int) -> bool: ...


class PrepViolation(AssertionError):
    def __init__(self, field: str, node: int, detail: str = ""):
        super().__init__(f"prep violates {field} at node {node}{': ' + detail if detail else ''}")
        self.field = field
        self.node = node


class FixViolation(AssertionError):
    def __init__(self, clause: str, node: int, detail: str = ""):
        super().__init__(f"fix violates ({clause}) at node {node}{': ' + detail if detail else ''}")
        self.clause = clause
        self.node = node


class PreconditionFailed(ValueError):
    pass


class LflPlugin:
    """Base class. Subclasses override the label algebra; defaults are the generic rules."""

    name = "lfl"
    insertion_closed = False
    supported: frozenset = frozenset({EventKind.EDGE_INSERT, EventKind.EDGE_DELETE})
    node_excerpt_bits = 0
    edge_excerpt_bits = 0

    def __init__(self, n: int):
        self.n = n

    # -- label algebra ---------------------------------------------------
    def initial_label(self, v: int, nbrs: frozenset) -> Label:
        raise NotImplementedError

    def node_excerpt(self, v: int, label: Label) -> Any:
        raise NotImplementedError

    def edge_excerpt(self, v: int, label: Label, u: int) -> Any:
        return DEFAULT

    def prepared(self, v: int, nbrs: frozenset, label: Label) -> bool:
        raise NotImplementedError

    def edge_correct(self, v: int, u: int, lvv: Any, lvu: Any, luv: Any, luu: Any) -> bool:
        raise NotImplementedError

    def star_ok(self, v: int, label: Label, nbr_excerpts: Mapping[int, Any]) -> bool:
        """Extra star-level condition beyond preparedness and edge-correctness."""
        return True

    def prep(self, v: int, n_old: frozenset, n_new: frozenset, label: Label) -> Label:
        raise NotImplementedError

    def fix(self, v: int, nbrs: Sequence[int], label: Label,
            excerpts: Sequence[Any]) -> tuple[Label, tuple]:
        raise NotImplementedError

    def apply_delta(self, u: int, label: Label, v: int, edge_exc: Any, beta: Any) -> Label:
        """New label of ``u`` after fixer ``v`` sent its edge excerpt and ``beta``."""
        raise NotImplementedError

    # -- dirty marking ---------------------------------------------------
    def dirty_rule(self, event: TopologyEvent, view: LocalView) -> list[DirtyMark]:
        k = event.kind
        if k.is_edge:
            return [DirtyMark(event.u, event.v, k.value), DirtyMark(event.v, event.u, k.value)]  # type: ignore[arg-type]
        if k is EventKind.NODE_INSERT:
            marks = [DirtyMark(event.u, event.u, k.value)]
            if not self.insertion_closed:
                marks += [DirtyMark(w, event.u, k.value) for w in event.edges]
            return marks
        return [DirtyMark(w, event.u, k.value) for w in sorted(view.old_nbrs(event.u)) if view.is_present(w)]

    def post_fix(self, v: int, old: Label, new: Label, view: LocalView,
                 origin: str) -> tuple[list[int], list[int]]:
        return [], []

    # -- serialization ---------------------------------------------------
    def encode_node_excerpt(self, x: Any) -> int:
        return 0

    def encode_edge_excerpt(self, x: Any) -> int:
        return 0

    def label_to_json(self, label: Label) -> Any:
        return label

    def label_from_json(self, obj: Any) -> Label:
        return obj

    # -- fuzzing ---------------------------------------------------------
    def random_labeling(self, rng: random.Random, adj: Adjacency) -> dict[int, Label]:
        """Labels prepared for ``adj`` and reciprocal on every edge."""
        raise NotImplementedError


# -- checkers ------------------------------------------------------------------

def view_consistent(plugin: LflPlugin, v: int, nbrs: frozenset, label: Label,
                    nbr_labels: Mapping[int, Label]) -> bool:
    if not plugin.prepared(v, nbrs, label):
        return False
    lvv = plugin.node_excerpt(v, label)
    exc = {}
    for u in nbrs:
        lu = nbr_labels[u]
        luu = plugin.node_excerpt(u, lu)
        exc[u] = luu
        if not plugin.edge_correct(v, u, lvv, plugin.edge_excerpt(v, label, u),
                                   plugin.edge_excerpt(u, lu, v), luu):
            return False
    return plugin.star_ok(v, label, exc)


def check_prep_contract(plugin: LflPlugin, v: int, n_old: frozenset, n_new: frozenset,
                        label_old: Label) -> Label:
    if not plugin.prepared(v, n_old, label_old):
        raise PreconditionFailed(f"label of {v} not prepared for its old neighborhood")
    new = plugin.prep(v, n_old, n_new, label_old)
    if not plugin.prepared(v, n_new, new):
        raise PrepViolation("preparedness", v)
    affected = n_old ^ n_new
    for u in range(plugin.n):
        if u == v or u in affected:
            continue
        if plugin.edge_excerpt(v, new, u) != plugin.edge_excerpt(v, label_old, u):
            raise PrepViolation("frozen-edge-excerpt", v, f"excerpt toward {u} changed")
    if plugin.insertion_closed and n_old <= n_new and new != label_old:
        raise PrepViolation("insertion-closed", v)
    return new


def check_fix_contract(plugin: LflPlugin, v: int, adj: Adjacency,
                       labels: Mapping[int, Label]) -> tuple[Label, dict[int, Label]]:
    """Run ``fix`` at ``v`` on a labeled local graph and check (a), (b1)-(b3).

    Returns v's new label and the neighbors' updated labels.
    """
    nv = adj[v]
    lv = labels[v]
    if not plugin.prepared(v, nv, lv):
        raise PreconditionFailed(f"label of {v} not prepared")
    for u in nv:
        if not plugin.prepared(u, adj[u], labels[u]):
            raise PreconditionFailed(f"label of neighbor {u} not prepared")
        if plugin.edge_excerpt(v, lv, u) != plugin.edge_excerpt(u, labels[u], v):
            raise PreconditionFailed(f"reciprocity fails on {{{v},{u}}}")

    order = sorted(nv)
    exc = tuple(plugin.node_excerpt(u, labels[u]) for u in order)
    new_v, betas = plugin.fix(v, order, lv, exc)
    if len(betas) != len(order):
        raise FixViolation("arity", v, f"{len(betas)} betas for {len(order)} neighbors")

    if not plugin.prepared(v, nv, new_v):
        raise FixViolation("a", v)
    nvv = plugin.node_excerpt(v, new_v)
    updated = {}
    for u, beta in zip(order, betas):
        lu = labels[u]
        new_u = plugin.apply_delta(u, lu, v, plugin.edge_excerpt(v, new_v, u), beta)
        updated[u] = new_u
        nuu = plugin.node_excerpt(u, new_u)
        if nuu != beta:
            raise FixViolation("b", u, "neighbor node excerpt differs from beta")
        if not plugin.edge_correct(v, u, nvv, plugin.edge_excerpt(v, new_v, u),
                                   plugin.edge_excerpt(u, new_u, v), nuu):
            raise FixViolation("b1", u)
        if not plugin.prepared(u, adj[u], new_u):
            raise FixViolation("b2", u)
        luu = plugin.node_excerpt(u, lu)
        for w in adj[u]:
            if w == v:
                continue
            lw = labels[w]
            lww = plugin.node_excerpt(w, lw)
            lwu = plugin.edge_excerpt(w, lw, u)
            before = plugin.edge_correct(u, w, luu, plugin.edge_excerpt(u, lu, w), lwu, lww)
            if before and not plugin.edge_correct(u, w, nuu, plugin.edge_excerpt(u, new_u, w), lwu, lww):
                raise FixViolation("b3", u, f"edge toward {w}")
            if plugin.edge_excerpt(u, new_u, w) != plugin.edge_excerpt(u, lu, w):
                raise FixViolation("b", u, f"excerpt toward {w} changed")
    return new_v, updated


# -- fuzzing -------------------------------------------------------------------

def random_graph(rng: random.Random, n: int, p: float | None = None) -> dict[int, frozenset]:
    p = rng.random() if p is None else p
    adj: dict[int, set] = {v: set() for v in range(n)}
    for u in range(n):
        for w in range(u + 1, n):
            if rng.random() < p:
                adj[u].add(w)
                adj[w].add(u)
    return {v: frozenset(s) for v, s in adj.items()}


def fuzz_prep(make: Callable[[int], LflPlugin], cases: int, seed: int = 0, n_max: int = 8) -> int:
    """Randomized prep checks; returns the number of cases run."""
    rng = random.Random(seed)
    for _ in range(cases):
        n = rng.randint(1, n_max)
        plugin = make(n)
        old = random_graph(rng, n)
        new = random_graph(rng, n)
        if rng.random() < 0.3:
            # pure insertions exercise insertion-closedness
            new = {v: old[v] | new[v] for v in old}
            new = _symmetrize(new)
        labels = plugin.random_labeling(rng, old)
        v = rng.randrange(n)
        check_prep_contract(plugin, v, old[v], new[v], labels[v])
    return cases


def fuzz_fix(make: Callable[[int], LflPlugin], cases: int, seed: int = 0, n_max: int = 8) -> int:
    rng = random.Random(seed)
    for _ in range(cases):
        n = rng.randint(1, n_max)
        plugin = make(n)
        adj = random_graph(rng, n)
        labels = plugin.random_labeling(rng, adj)
        v = rng.randrange(n)
        check_fix_contract(plugin, v, adj, labels)
    return cases


def _symmetrize(adj: Mapping[int, frozenset]) -> dict[int, frozenset]:
    out: dict[int, set] = {v: set(nb) for v, nb in adj.items()}
    for v, nb in adj.items():
        for u in nb:
            out[u].add(v)
    return {v: frozenset(s) for v, s in out.items()}
