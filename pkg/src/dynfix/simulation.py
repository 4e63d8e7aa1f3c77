"""One complete run: engine + monitor over a schedule, producing trace rows and a summary."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import groupby
from typing import Any, Iterable, Mapping, Sequence

from .dyngraph import TopologyEvent, UnsupportedEventKind, validate_schedule
from .engine import Engine
from .protocols import make_plugin
from .verify import Monitor

__all__ = ["RunConfig", "RunResult", "simulate", "default_cooldown", "TRACE_COLUMNS",
           "trace_csv", "summary_json", "state_dump"]

TRACE_COLUMNS = (
    "round", "epoch", "phase", "dirty", "indicated", "tainted", "actives", "aborted",
    "messages", "max_message_bits", "inconsistent_stars", "changes_so_far", "incorrect", "epochs",
)


def default_cooldown(n: int, gamma: int) -> int:
    return (gamma + 1) * n + gamma


@dataclass
class RunConfig:
    protocol: str = "mm"
    n: int = 8
    gamma: int = 5
    delta: int | None = None
    weights: Mapping[int, int] | Sequence[int] | None = None
    seed: int = 0
    cooldown: int | None = None
    rounds: int = 0
    strict: bool = False
    check_invariants: bool = True
    check_oracle: bool = True
    keep_trace: bool = True
    keep_log: bool = True


@dataclass
class RunResult:
    config: RunConfig
    trace: list[tuple]
    summary: dict[str, Any]
    violations: list[dict]
    engine: Engine = field(repr=False)
    monitor: Monitor = field(repr=False)


def simulate(config: RunConfig, schedule: Iterable[TopologyEvent]) -> RunResult:
    """Run to the last scheduled round plus the cooldown.

    Raises UnsupportedEventKind before the first round if the schedule needs an
    event kind the protocol lacks.
    """
    events = sorted(schedule, key=TopologyEvent.sort_key)
    plugin = make_plugin(config.protocol, config.n, delta=config.delta, weights=config.weights, seed=config.seed)
    bad = validate_schedule(events, plugin.name, plugin.supported)
    if bad:
        raise bad[0]
    eng = Engine(plugin, config.n, config.gamma)
    mon = Monitor(eng, strict=config.strict, factor=2 * config.gamma, check_invariants=config.check_invariants,
                  check_oracle=config.check_oracle, keep_log=config.keep_log)
    cooldown = default_cooldown(config.n, config.gamma) if config.cooldown is None else config.cooldown
    last = events[-1].round if events else -1
    horizon = max(last + 1 + cooldown, config.rounds)

    batches = {r: list(b) for r, b in groupby(events, key=lambda e: e.round)}
    trace: list[tuple] = []
    max_bits = 0
    for r in range(horizon):
        batch = batches.get(r, ())
        mon.before(batch)
        st = eng.step(batch)
        bad_stars = mon.observe(st)
        if st.max_message_bits > max_bits:
            max_bits = st.max_message_bits
        if config.keep_trace:
            m = mon.metrics
            trace.append((st.round, st.epoch, st.phase, st.dirty, st.indicated, st.tainted, st.actives,
                          st.aborted, st.messages, st.max_message_bits, bad_stars, st.changes,
                          m.incorrect, m.epochs))

    m = mon.metrics
    summary: dict[str, Any] = {
        "protocol": plugin.name,
        "n": config.n,
        "gamma": config.gamma,
        "seed": config.seed,
        "rounds": horizon,
        "changes": m.changes,
        "incorrect": m.incorrect,
        "incorrect_alt": m.incorrect_alt,
        "epochs": m.epochs,
        "final_ratio": round(m.ratio, 6),
        "max_ratio": round(m.max_ratio, 6),
        "max_ratio_round": m.max_ratio_round,
        "max_message_bits": max_bits,
        "bit_budget": eng.budget,
        "max_timestamp_gap": mon.max_gap,
        "oracle_checks": mon.oracle_runs,
        "invariant_checks": mon.invariant_runs,
        "final_inconsistent_stars": mon.last_inconsistent,
        "quiescent": eng.is_quiescent(),
        "violations": mon.violations_json(),
    }
    if mon.blame is not None:
        summary["blame"] = dict(mon.blame.stats(), epoch_budget_ok=mon.epoch_budget_ok)
    return RunResult(config, trace, summary, summary["violations"], eng, mon)


def trace_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def summary_json(summary: Mapping[str, Any]) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def state_dump(result: RunResult) -> dict[str, Any]:
    """Everything `check` needs to re-verify a finished run offline."""
    eng = result.engine
    plugin = eng.plugin
    cfg = result.config
    out: dict[str, Any] = {
        "protocol": plugin.name,
        "n": cfg.n,
        "gamma": cfg.gamma,
        "round": eng.snapshot.round,
        "nodes": sorted(eng.snapshot.adj),
        "edges": sorted([list(e) for e in eng.snapshot.edges]),
        "labels": {str(v): plugin.label_to_json(eng.labels[v]) for v in sorted(eng.labels)},
        "dirty": sorted(eng.ts),
        "log": [list(row[:3]) for row in result.monitor.metrics.log],
    }
    if plugin.name == "coloring-delta":
        out["delta"] = plugin.delta  # type: ignore[attr-defined]
    if plugin.name == "mwvc":
        w = plugin.weights  # type: ignore[attr-defined]
        out["weights"] = {str(v): w[v] for v in range(cfg.n)}
    return out
