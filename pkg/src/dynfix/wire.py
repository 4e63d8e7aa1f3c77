"""Bit-exact message serialization and the per-message bit budget."""

from __future__ import annotations

from typing import Iterable

TAG_BITS = 2


def clog2(x: int) -> int:
    """Ceiling of log2(x) for x >= 1; 0 for x == 1."""
    if x < 1:
        raise ValueError("clog2 needs x >= 1")
    return (x - 1).bit_length()


def bit_budget(n: int) -> int:
    return 8 * clog2(max(n, 1)) + 64


def pack(fields: Iterable[tuple[int, int]]) -> tuple[int, int]:
    """Concatenate (value, width) fields big-endian; returns (value, total width)."""
    acc = 0
    total = 0
    for value, width in fields:
        if value < 0 or value >> width:
            raise OverflowError(f"{value} does not fit in {width} bits")
        acc = (acc << width) | value
        total += width
    return acc, total


def unpack(value: int, widths: Iterable[int]) -> list[int]:
    widths = list(widths)
    out = []
    shift = sum(widths)
    for w in widths:
        shift -= w
        out.append((value >> shift) & ((1 << w) - 1))
    return out


def to_bytes(value: int, width: int) -> bytes:
    """Left-aligned, zero-padded byte string of a ``width``-bit field."""
    nbytes = (width + 7) // 8
    return (value << (nbytes * 8 - width)).to_bytes(nbytes, "big") if nbytes else b""
