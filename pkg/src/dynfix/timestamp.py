"""Change timestamps, their bounded hashes and the wraparound order."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, NamedTuple

from .dyngraph import EventKind, TopologyEvent
from .wire import clog2, pack, unpack

__all__ = [
    "Timestamp",
    "HashedTimestamp",
    "GammaConfig",
    "Order",
    "make_timestamps",
    "keep_largest",
    "hash_timestamp",
    "cmp_hashed",
    "hashed_less",
    "encode_hashed",
    "decode_hashed",
]


class Timestamp(NamedTuple):
    i: int
    owner: int
    other: int


class HashedTimestamp(NamedTuple):
    h: int
    owner: int
    other: int


class Order(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class GammaConfig:
    n: int
    gamma: int = 5

    def __post_init__(self):
        if self.gamma < 5:
            raise ValueError("gamma must be at least 5")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def gn(self) -> int:
        return self.gamma * self.n

    @property
    def modulus(self) -> int:
        return 3 * self.gamma * self.n

    @property
    def h_bits(self) -> int:
        return clog2(self.modulus)

    @property
    def id_bits(self) -> int:
        return clog2(self.n)


def make_timestamps(event: TopologyEvent, owners: Iterable[int] | None = None) -> list[Timestamp]:
    """Timestamps created by ``event``.

    Edge events yield one per endpoint. Node events yield one per node in
    ``owners`` (the protocol's dirty rule decides who), with the event's node
    as third field.
    """
    i = event.round
    if event.kind.is_edge and owners is None:
        return [Timestamp(i, event.u, event.v), Timestamp(i, event.v, event.u)]  # type: ignore[arg-type]
    if owners is None:
        owners = [event.u] if event.kind is EventKind.NODE_INSERT else []
    out = []
    for z in owners:
        if event.kind.is_edge:
            out.append(Timestamp(i, z, event.v if z == event.u else event.u))  # type: ignore[arg-type]
        else:
            out.append(Timestamp(i, z, event.u))
    return out


def keep_largest(owned: Iterable[Timestamp]) -> Timestamp:
    owned = list(owned)
    if not owned:
        raise ValueError("no timestamps")
    if len({ts.owner for ts in owned}) > 1:
        raise ValueError("timestamps have different owners")
    return max(owned)


def hash_timestamp(ts: Timestamp, cfg: GammaConfig) -> HashedTimestamp:
    return HashedTimestamp(ts.i % cfg.modulus, ts.owner, ts.other)


def _h_less(a: int, b: int, gn: int) -> bool:
    # first bullet taken with a strict upper end so that the pair
    # (2gn, 0) is ordered only by the wraparound bullet
    if 0 <= a < b < 2 * gn:
        return True
    if gn <= a < b <= 3 * gn:
        return True
    return 2 * gn <= a < 3 * gn and 0 <= b < gn


def cmp_hashed(a: HashedTimestamp, b: HashedTimestamp, cfg: GammaConfig) -> Order:
    if a.h != b.h:
        gn = cfg.gn
        if _h_less(a.h, b.h, gn):
            return Order.LESS
        if _h_less(b.h, a.h, gn):
            return Order.GREATER
        return Order.LESS if a.h < b.h else Order.GREATER
    if (a.owner, a.other) == (b.owner, b.other):
        return Order.EQUAL
    return Order.LESS if (a.owner, a.other) < (b.owner, b.other) else Order.GREATER


def hashed_less(a: HashedTimestamp, b: HashedTimestamp, cfg: GammaConfig) -> bool:
    return cmp_hashed(a, b, cfg) is Order.LESS


def encode_hashed(hts: HashedTimestamp, cfg: GammaConfig) -> tuple[int, int]:
    """(value, width): h, owner, other big-endian."""
    ib = cfg.id_bits
    return pack([(hts.h, cfg.h_bits), (hts.owner, ib), (hts.other, ib)])


def decode_hashed(value: int, cfg: GammaConfig) -> HashedTimestamp:
    ib = cfg.id_bits
    return HashedTimestamp(*unpack(value, [cfg.h_bits, ib, ib]))
