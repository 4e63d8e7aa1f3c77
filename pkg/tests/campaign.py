"""Seeded fuzz campaign shared by the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass

from dynfix.adversary import RandomChurn, ScheduleSpec, generate
from dynfix.simulation import RunConfig, RunResult, simulate

SIZES = (8, 16, 32, 64)
RATES = (1, 2, 5, 10, 25, 50)
HORIZONS = (50, 100, 200, 500, 2000)
EVENT_CAP = 12_000  # rate * horizon ceiling keeps the campaign inside its time budget


@dataclass(frozen=True)
class Case:
    protocol: str
    seed: int
    n: int
    rate: int
    horizon: int


def case(protocol: str, i: int) -> Case:
    n = SIZES[i % 4]
    rate = min(RATES[(i // 4) % len(RATES)], n * (n - 1) // 2)
    horizon = HORIZONS[(i // 24) % len(HORIZONS)]
    if rate * horizon > EVENT_CAP:
        horizon = max(50, EVENT_CAP // rate)
    # one long low-rate run per 24 keeps the 2000-round horizon covered
    if i % 24 == 23:
        rate, horizon = 1, 2000
    return Case(protocol, 1000 * i + 7, n, rate, horizon)


def run_case(c: Case, **overrides) -> RunResult:
    events = generate(ScheduleSpec(c.n, c.horizon, c.seed, RandomChurn(c.rate, protocol=c.protocol)))
    cfg = RunConfig(protocol=c.protocol, n=c.n, seed=c.seed, keep_trace=False, keep_log=False)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return simulate(cfg, events)
