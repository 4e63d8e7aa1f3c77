"""Omniscient checks and the amortized-cost accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .dyngraph import Snapshot
from .lfl import LflPlugin, view_consistent
from .protocols.mis import BLAMED_ORIGINS, FLIP_ORIGINS
from .timestamp import GammaConfig, Timestamp

__all__ = [
    "Metrics",
    "StarTracker",
    "BlameLedger",
    "Monitor",
    "Violation",
    "AmortizedBoundViolated",
    "InvariantViolated",
    "SolutionInvalid",
    "GapViolated",
    "BlameCollision",
    "count_round",
    "inconsistent_nodes",
    "assert_amortized",
    "check_epoch_invariants",
    "oracle_check",
    "assert_coexistence_gap",
    "min_vertex_cover_weight",
]


class Violation(AssertionError):
    kind = "violation"

    def to_json(self) -> dict:
        out = {"type": type(self).__name__, "message": str(self)}
        out.update({k: v for k, v in vars(self).items() if isinstance(v, (int, float, str, list, type(None)))})
        return out


class AmortizedBoundViolated(Violation):
    def __init__(self, round: int, ratio: float, incorrect: int = 0, changes: int = 0):
        super().__init__(f"round {round}: incorrect/changes = {incorrect}/{changes} = {ratio:.3f}")
        self.round = round
        self.ratio = ratio
        self.incorrect = incorrect
        self.changes = changes


class InvariantViolated(Violation):
    def __init__(self, which: str, node: int, round: int | None = None, detail: str = ""):
        super().__init__(f"invariant {which} fails at node {node}" + (f" (round {round})" if round is not None else "")
                         + (f": {detail}" if detail else ""))
        self.which = which
        self.node = node
        self.round = round


class SolutionInvalid(Violation):
    def __init__(self, problem: str, witness: Any, round: int | None = None):
        super().__init__(f"{problem} solution invalid: {witness}")
        self.problem = problem
        self.witness = json.dumps(witness, default=str)
        self.round = round


class GapViolated(Violation):
    def __init__(self, gap: int, limit: int, round: int | None = None):
        super().__init__(f"live timestamps span {gap} rounds, limit {limit}")
        self.gap = gap
        self.limit = limit
        self.round = round


class BlameCollision(Violation):
    def __init__(self, node: int, round: int, detail: str):
        super().__init__(f"blame for activation of {node} at round {round}: {detail}")
        self.node = node
        self.round = round


# -- star consistency ------------------------------------------------------------

def _consistent(plugin: LflPlugin, adj: Mapping[int, frozenset], labels: Mapping[int, Any], v: int) -> bool:
    nb = adj[v]
    return view_consistent(plugin, v, nb, labels[v], {u: labels[u] for u in nb})


def inconsistent_nodes(snapshot: Snapshot, labels: Mapping[int, Any], plugin: LflPlugin,
                       nodes: Iterable[int] | None = None) -> set[int]:
    adj = snapshot.adj
    todo = adj if nodes is None else [v for v in nodes if v in adj]
    return {v for v in todo if not _consistent(plugin, adj, labels, v)}


def count_round(snapshot: Snapshot, labels: Mapping[int, Any], plugin: LflPlugin) -> int:
    """Number of present nodes whose star is inconsistent in ``snapshot``."""
    return len(inconsistent_nodes(snapshot, labels, plugin))


class StarTracker:
    """Incremental inconsistent-star set; only stars near touched nodes are rechecked."""

    def __init__(self, plugin: LflPlugin):
        self.plugin = plugin
        self.bad: set[int] = set()

    def reset(self, snapshot: Snapshot, labels: Mapping[int, Any]) -> int:
        self.bad = inconsistent_nodes(snapshot, labels, self.plugin)
        return len(self.bad)

    def update(self, snapshot: Snapshot, labels: Mapping[int, Any], touched: Iterable[int]) -> int:
        adj = snapshot.adj
        todo: set[int] = set()
        for v in touched:
            nb = adj.get(v)
            if nb is None:
                self.bad.discard(v)
                continue
            todo.add(v)
            todo.update(nb)
        plugin = self.plugin
        for v in todo:
            if _consistent(plugin, adj, labels, v):
                self.bad.discard(v)
            else:
                self.bad.add(v)
        return len(self.bad)


# -- metrics ---------------------------------------------------------------------

@dataclass
class Metrics:
    incorrect: int = 0
    incorrect_alt: int = 0
    changes: int = 0
    epochs: int = 0
    max_ratio: float = 0.0
    max_ratio_round: int = -1
    log: list[tuple[int, int, int, int]] = field(default_factory=list)
    keep_log: bool = True

    def record(self, round: int, inconsistent: int, changes: int, epochs: int, communicated: bool) -> None:
        if inconsistent:
            self.incorrect += 1
        if inconsistent or communicated:
            self.incorrect_alt += 1
        self.changes = changes
        self.epochs = epochs
        if changes:
            ratio = self.incorrect / changes
            if ratio > self.max_ratio:
                self.max_ratio = ratio
                self.max_ratio_round = round
        if self.keep_log:
            self.log.append((round, self.incorrect, changes, epochs))

    @property
    def ratio(self) -> float:
        return self.incorrect / self.changes if self.changes else 0.0


def assert_amortized(metrics: Metrics | Iterable[tuple[int, int, int, int]], factor: float | Fraction = 10) -> None:
    """Raise if incorrect(i) > factor * changes(i) at any logged round with changes(i) > 0."""
    rows = metrics.log if isinstance(metrics, Metrics) else metrics
    f = Fraction(factor).limit_denominator(10**6) if not isinstance(factor, Fraction) else factor
    for row in rows:
        rnd, incorrect, changes = row[0], row[1], row[2]
        if changes > 0 and incorrect > f * changes:
            raise AmortizedBoundViolated(rnd, incorrect / changes, incorrect, changes)


# -- epoch invariants ------------------------------------------------------------

def check_epoch_invariants(plugin: LflPlugin, snap_gj: Snapshot, labels: Mapping[int, Any],
                           dirty: Iterable[int], current: Snapshot | None = None,
                           round: int | None = None) -> None:
    """End-of-epoch checks.

    (1) every node of G_gj still present has a label prepared for its G_gj
    neighborhood; (2) clean-clean edges are edge-correct; (3) a clean node whose
    neighbors are all clean has a consistent view. (2) and (3) use the live
    graph ``current``: for a node without indications this epoch its neighborhood
    is the G_gj one, and for an indicated node the G_gj star is stale.
    """
    dirty = set(dirty)
    cur = (current or snap_gj).adj
    for v, nb in snap_gj.adj.items():
        if v in cur and not plugin.prepared(v, nb, labels[v]):
            raise InvariantViolated("prepared", v, round)
    for v, nb in cur.items():
        if v in dirty:
            continue
        lv = labels[v]
        lvv = plugin.node_excerpt(v, lv)
        all_clean = True
        for u in nb:
            if u in dirty:
                all_clean = False
                continue
            if v < u:
                lu = labels[u]
                if not plugin.edge_correct(v, u, lvv, plugin.edge_excerpt(v, lv, u),
                                           plugin.edge_excerpt(u, lu, v), plugin.node_excerpt(u, lu)):
                    raise InvariantViolated("edge-correct", v, round, f"edge to {u}")
        if all_clean and not view_consistent(plugin, v, nb, lv, {u: labels[u] for u in nb}):
            raise InvariantViolated("clean-star", v, round)


# -- solution oracles ------------------------------------------------------------

@lru_cache(maxsize=4096)
def _min_cover(k: int, edges: tuple[tuple[int, int], ...], weights: tuple[int, ...]) -> int:
    if not edges:
        return 0
    subsets = np.arange(1 << k, dtype=np.int64)
    ok = np.ones(1 << k, dtype=bool)
    for a, b in edges:
        ok &= (((subsets >> a) | (subsets >> b)) & 1).astype(bool)
    bits = ((subsets[:, None] >> np.arange(k)) & 1).astype(np.int64)
    cost = bits @ np.asarray(weights, dtype=np.int64)
    return int(cost[ok].min())


def min_vertex_cover_weight(nodes: Iterable[int], edges: Iterable[tuple[int, int]],
                            weights: Mapping[int, int] | Sequence[int]) -> int:
    nodes = sorted(set(nodes))
    idx = {v: i for i, v in enumerate(nodes)}
    if len(nodes) > 20:
        raise ValueError("exhaustive search limited to 20 nodes")
    es = tuple(sorted((idx[a], idx[b]) if idx[a] < idx[b] else (idx[b], idx[a]) for a, b in edges))
    return _min_cover(len(nodes), es, tuple(weights[v] for v in nodes))


OPT_NODE_CAP = 16


def oracle_check(snapshot: Snapshot, labels: Mapping[int, Any], plugin: LflPlugin,
                 round: int | None = None) -> None:
    """Global legality of the labeling on ``snapshot`` (brute force)."""
    adj = snapshot.adj
    name = plugin.name
    edges = sorted(snapshot.edges)
    if name == "mm":
        for v, lab in labels.items():
            if lab is not None and (lab not in adj[v] or labels.get(lab) != v):
                raise SolutionInvalid("mm", {"node": v, "label": lab}, round)
        for a, b in edges:
            if labels[a] is None and labels[b] is None:
                raise SolutionInvalid("mm", {"unmatched_edge": [a, b]}, round)
    elif name in ("coloring-deg", "coloring-delta"):
        for v, c in labels.items():
            top = len(adj[v]) + 1 if name == "coloring-deg" else plugin.delta + 1  # type: ignore[attr-defined]
            if not 1 <= c <= top:
                raise SolutionInvalid(name, {"node": v, "color": c, "palette": top}, round)
        for a, b in edges:
            if labels[a] == labels[b]:
                raise SolutionInvalid(name, {"monochrome_edge": [a, b]}, round)
    elif name == "mis":
        for a, b in edges:
            if labels[a] and labels[b]:
                raise SolutionInvalid("mis", {"adjacent_members": [a, b]}, round)
        for v, lab in labels.items():
            if not lab and not any(labels[u] for u in adj[v]):
                raise SolutionInvalid("mis", {"undominated": v}, round)
    elif name == "mwvc":
        w = plugin.weights  # type: ignore[attr-defined]
        for v, lab in labels.items():
            if lab.remaining < 0 or lab.remaining + sum(d for _, d in lab.duals) != w[v]:
                raise SolutionInvalid("mwvc", {"node": v, "reason": "weight not conserved"}, round)
            for u, d in lab.duals:
                if u not in adj[v] or labels[u].dual(v) != d:
                    raise SolutionInvalid("mwvc", {"node": v, "reason": f"dual toward {u} not reciprocal"}, round)
        cover = {v for v, lab in labels.items() if lab.remaining == 0}
        for a, b in edges:
            if a not in cover and b not in cover:
                raise SolutionInvalid("mwvc", {"uncovered_edge": [a, b]}, round)
        if len(adj) <= OPT_NODE_CAP:
            opt = min_vertex_cover_weight(adj, edges, w)
            got = sum(w[v] for v in cover)
            if got > 2 * opt:
                raise SolutionInvalid("mwvc", {"cover_weight": got, "opt": opt}, round)
    else:
        bad = inconsistent_nodes(snapshot, labels, plugin)
        if bad:
            raise SolutionInvalid(name, {"inconsistent": sorted(bad)[:10]}, round)


def assert_coexistence_gap(stamps: Iterable[Timestamp], cfg: GammaConfig, round: int | None = None) -> int:
    rounds = [t.i for t in stamps]
    if not rounds:
        return 0
    gap = max(rounds) - min(rounds)
    if gap > cfg.gn:
        raise GapViolated(gap, cfg.gn, round)
    return gap


# -- blame ledger ------------------------------------------------------------------

class BlameLedger:
    """Charges each activation made dirty by a neighbor (items 4 and 5) to the
    last change that flipped the node from True to False.

    A flip may be charged once. An activation with no uncharged flip is a
    collision; it is recorded (or raised with ``strict``) together with the
    re-domination credit that would cover it: an edge insertion joining the
    false node to a True one, a node insertion next to it, or a neighbor's fix
    to True.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.last_flip: dict[int, tuple[int, int]] = {}
        self.charged: dict[tuple[int, int], tuple[int, int]] = {}
        self.credits: dict[int, list[tuple[str, int]]] = {}
        self.collisions: list[BlameCollision] = []
        self.covered_by: dict[str, int] = {"edge": 0, "node": 0, "nbrfix": 0}
        self.flips = 0

    def on_events(self, events: Iterable, labels: Mapping[int, Any], round: int) -> None:
        """Record re-domination credits; ``labels`` are the pre-event labels."""
        for ev in events:
            k = ev.kind.value
            if k == "e+":
                a, b = labels.get(ev.u), labels.get(ev.v)
                if a is not None and b is not None and a != b:
                    self.credits.setdefault(ev.u if b else ev.v, []).append(("edge", round))
            elif k == "v+":
                for z in ev.edges:
                    if labels.get(z) is False:
                        self.credits.setdefault(z, []).append(("node", round))
            elif k == "v-":
                self.on_delete(ev.u)

    def on_fix(self, node: int, origin: str, old: Any, new: Any, round: int,
               nbrs: Iterable[int] = (), labels: Mapping[int, Any] | None = None) -> None:
        if origin in BLAMED_ORIGINS:
            flip = self.last_flip.get(node)
            if flip is not None and flip not in self.charged:
                self.charged[flip] = (round, node)
            else:
                why = "no earlier flip" if flip is None else f"flip at round {flip[0]} already charged"
                cred = self.credits.get(node)
                if cred:
                    kind, _ = cred.pop(0)
                    self.covered_by[kind] += 1
                    why += f"; covered by a {kind} re-domination"
                exc = BlameCollision(node, round, why)
                self.collisions.append(exc)
                if self.strict:
                    raise exc
        if origin in FLIP_ORIGINS and old is True and new is False:
            self.last_flip[node] = (round, node)
            self.credits.pop(node, None)
            self.flips += 1
        if new is True and labels is not None:
            for z in nbrs:
                if labels.get(z) is False:
                    self.credits.setdefault(z, []).append(("nbrfix", round))

    def on_delete(self, node: int) -> None:
        self.last_flip.pop(node, None)
        self.credits.pop(node, None)

    def injective(self) -> bool:
        return not self.collisions and len(set(self.charged.values())) == len(self.charged)

    def uncovered(self) -> int:
        return len(self.collisions) - sum(self.covered_by.values())

    def stats(self) -> dict[str, Any]:
        return {"flips": self.flips, "charged": len(self.charged), "collisions": len(self.collisions),
                "covered_by": dict(self.covered_by), "uncovered": self.uncovered(),
                "injective": self.injective()}


# -- monitor ---------------------------------------------------------------------

class Monitor:
    """Runs every omniscient check alongside an engine, one round at a time."""

    def __init__(self, engine, strict: bool = True, factor: float = 10, check_invariants: bool = True,
                 check_oracle: bool = True, keep_log: bool = False, strict_blame: bool = False):
        self.engine = engine
        self.plugin = engine.plugin
        self.strict = strict
        self.factor = Fraction(factor).limit_denominator(10**6)
        self.check_invariants = check_invariants
        self.check_oracle = check_oracle
        self.stars = StarTracker(self.plugin)
        self.stars.reset(engine.snapshot, engine.labels)
        self.metrics = Metrics(keep_log=keep_log)
        self.violations: list[Violation] = []
        self.blame = BlameLedger(strict_blame) if self.plugin.name == "mis" else None
        self.oracle_runs = 0
        self.invariant_runs = 0
        self.max_gap = 0
        self.last_inconsistent = 0
        self.epoch_budget_ok = True

    def _fail(self, exc: Violation) -> None:
        if self.strict:
            raise exc
        self.violations.append(exc)

    def before(self, events: Sequence) -> None:
        """Call with the round's events before the engine steps."""
        if self.blame is not None and events:
            self.blame.on_events(events, self.engine.labels, self.engine.round)

    def observe(self, stats) -> int:
        """Update everything after one engine step; returns the inconsistent-star count."""
        eng = self.engine
        r = stats.round
        g = eng.gamma
        o = r % g
        if eng.touched:
            bad = self.stars.update(eng.snapshot, eng.labels, eng.touched)
        else:
            bad = len(self.stars.bad)
        self.last_inconsistent = bad

        epochs = eng.epochs_with_messages + (1 if eng.epoch_messages and o != g - 1 else 0)
        self.metrics.record(r, bad, eng.changes, epochs, stats.messages > 0)
        m = self.metrics
        if m.changes and m.incorrect > self.factor * m.changes:
            self._fail(AmortizedBoundViolated(r, m.incorrect / m.changes, m.incorrect, m.changes))

        if eng.ts:
            try:
                self.max_gap = max(self.max_gap, assert_coexistence_gap(eng.ts.values(), eng.cfg, r))
            except GapViolated as exc:
                self._fail(exc)

        if self.blame is not None:
            for rec in eng.fixes:
                try:
                    self.blame.on_fix(rec.node, rec.origin, rec.old, rec.new, r, rec.receivers, eng.labels)
                except BlameCollision as exc:
                    self._fail(exc)
            if m.epochs > 2 * m.changes:
                self.epoch_budget_ok = False
                self._fail(InvariantViolated("epochs<=2*changes", -1, r, f"{m.epochs} > 2*{m.changes}"))

        if o == g - 1:
            if self.check_invariants and r >= g:
                self.invariant_runs += 1
                try:
                    check_epoch_invariants(self.plugin, eng.snap_gj, eng.labels, eng.ts, eng.snapshot, r)
                except InvariantViolated as exc:
                    self._fail(exc)
            if self.check_oracle and not eng.ts:
                self.oracle_runs += 1
                try:
                    oracle_check(eng.snapshot, eng.labels, self.plugin, r)
                except SolutionInvalid as exc:
                    self._fail(exc)
        return bad

    def violations_json(self) -> list[dict]:
        return [v.to_json() for v in self.violations]
