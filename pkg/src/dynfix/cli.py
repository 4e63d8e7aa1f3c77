"""dynfix command line: run, gen, check."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .adversary import DEFAULT_MIX, InfeasibleSpec, Pattern, RandomChurn, ScheduleSpec, generate, replay
from .dyngraph import EventKind, InvalidEvent, ParseError, Snapshot, UnsupportedEventKind, dump_schedule
from .protocols import PROTOCOLS, make_plugin
from .simulation import RunConfig, simulate, state_dump, summary_json, trace_csv
from .verify import Violation, assert_amortized, oracle_check

EXIT_OK, EXIT_VIOLATION, EXIT_UNSUPPORTED, EXIT_INPUT = 0, 1, 2, 3


def _kv(items: Sequence[str] | None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _mix(text: str | None) -> dict[EventKind, float]:
    if not text:
        return dict(DEFAULT_MIX)
    mix = {}
    for part in text.split(","):
        k, _, w = part.partition("=")
        mix[EventKind(k.strip())] = float(w)
    return mix


def _load_weights(path: str | None) -> dict[int, int] | None:
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {int(k): int(v) for k, v in raw.items()}


def _schedule(args: argparse.Namespace) -> list:
    if args.schedule:
        return replay(args.schedule, args.n)
    spec_rounds = args.rounds or 200
    if args.pattern:
        mode = Pattern(args.pattern, _kv(args.param))
    else:
        mode = RandomChurn(args.churn or 0, _mix(args.mix), protocol=args.protocol)
    return generate(ScheduleSpec(args.n, spec_rounds, args.seed, mode))


def cmd_run(args: argparse.Namespace) -> int:
    cfg = RunConfig(protocol=args.protocol, n=args.n, gamma=args.gamma, delta=args.delta,
                    weights=_load_weights(args.weights), seed=args.seed, cooldown=args.cooldown,
                    rounds=args.rounds or 0, strict=args.strict)
    try:
        events = _schedule(args)
        result = simulate(cfg, events)
    except UnsupportedEventKind as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except Violation as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ParseError, InvalidEvent, InfeasibleSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace_csv(result.trace), encoding="utf-8")
    (out / "summary.json").write_text(summary_json(result.summary), encoding="utf-8")
    if args.dump_state:
        (out / "state.json").write_text(json.dumps(state_dump(result), sort_keys=True) + "\n", encoding="utf-8")
    s = result.summary
    print(f"{s['protocol']}: rounds={s['rounds']} changes={s['changes']} incorrect={s['incorrect']} "
          f"max_ratio={s['max_ratio']} violations={len(s['violations'])}")
    if args.strict and s["violations"]:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.pattern:
        mode: Any = Pattern(args.pattern, _kv(args.param))
    else:
        mode = RandomChurn(args.churn, _mix(args.mix), protocol=args.protocol)
    try:
        events = generate(ScheduleSpec(args.n, args.rounds, args.seed, mode))
    except InfeasibleSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    dump_schedule(events, args.out)
    print(f"wrote {len(events)} events to {args.out}")
    return EXIT_OK


def check_state(state: dict) -> list[dict]:
    """Re-run the offline checks on a state dump; returns violations as JSON objects."""
    n = state["n"]
    weights = {int(k): v for k, v in state["weights"].items()} if "weights" in state else None
    plugin = make_plugin(state["protocol"], n, delta=state.get("delta"), weights=weights)
    snap = Snapshot.from_edges(n, [tuple(e) for e in state["edges"]], nodes=state["nodes"],
                               round=state.get("round", -1))
    labels = {int(k): plugin.label_from_json(v) for k, v in state["labels"].items()}
    found: list[dict] = []
    if set(labels) != set(snap.adj):
        found.append({"type": "StateMismatch", "message": "labels do not match the node set"})
        return found
    if not state.get("dirty"):
        try:
            oracle_check(snap, labels, plugin, state.get("round"))
        except Violation as exc:
            found.append(exc.to_json())
    try:
        assert_amortized([tuple(r) for r in state.get("log", [])], 2 * state.get("gamma", 5))
    except Violation as exc:
        found.append(exc.to_json())
    return found


def cmd_check(args: argparse.Namespace) -> int:
    with open(args.state, encoding="utf-8") as fh:
        state = json.load(fh)
    found = check_state(state)
    print(json.dumps({"violations": found}, sort_keys=True, indent=2))
    return EXIT_VIOLATION if found else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynfix", description="Dynamic locally-fixable labeling simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    def schedule_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--rounds", type=int, default=None, help="generator horizon / minimum run length")
        sp.add_argument("--churn", type=int, default=None, metavar="RATE", help="random churn, events per round")
        sp.add_argument("--mix", default=None, help="kind weights, e.g. 'e+=4,e-=4,v+=1,v-=1'")
        sp.add_argument("--pattern", default=None, help="named stress pattern")
        sp.add_argument("--param", action="append", help="pattern parameter key=value (repeatable)")
        sp.add_argument("--protocol", default="mm", help=f"one of {', '.join(PROTOCOLS)} or module:factory")

    r = sub.add_parser("run", help="simulate a protocol over a schedule")
    schedule_opts(r)
    r.add_argument("--gamma", type=int, default=5)
    r.add_argument("--delta", type=int, default=None, help="degree bound for coloring-delta")
    r.add_argument("--schedule", default=None, help="JSONL schedule file")
    r.add_argument("--weights", default=None, help="JSON map id -> weight (mwvc)")
    r.add_argument("--out", default="out")
    r.add_argument("--strict", action="store_true", help="stop at the first violation, exit 1")
    r.add_argument("--cooldown", type=int, default=None)
    r.add_argument("--dump-state", action="store_true")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen", help="write a schedule file")
    schedule_opts(g)
    g.set_defaults(rounds=200, churn=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="re-verify a state dump")
    c.add_argument("--state", required=True)
    c.set_defaults(func=cmd_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
