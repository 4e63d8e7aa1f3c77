"""Bundled plugins and a name registry."""

from __future__ import annotations

import importlib
from typing import Mapping, Sequence

from ..lfl import LflPlugin
from .coloring import DegreeColoring, DeltaColoring
from .matching import MaximalMatching
from .mis import MaximalIndependentSet
from .vertex_cover import VertexCover, VcLabel

PROTOCOLS = ("mm", "coloring-deg", "coloring-delta", "mwvc", "mis")

__all__ = [
    "PROTOCOLS",
    "make_plugin",
    "MaximalMatching",
    "DegreeColoring",
    "DeltaColoring",
    "VertexCover",
    "VcLabel",
    "MaximalIndependentSet",
]


def make_plugin(name: str, n: int, delta: int | None = None,
                weights: Mapping[int, int] | Sequence[int] | None = None, seed: int = 0) -> LflPlugin:
    """Build a plugin by protocol name, or from a ``module:attr`` factory path."""
    if name == "mm":
        return MaximalMatching(n)
    if name == "coloring-deg":
        return DegreeColoring(n)
    if name == "coloring-delta":
        return DeltaColoring(n, delta)
    if name == "mwvc":
        return VertexCover(n, weights, seed=seed)
    if name == "mis":
        return MaximalIndependentSet(n)
    if ":" in name:
        mod, attr = name.split(":", 1)
        factory = getattr(importlib.import_module(mod), attr)
        plugin = factory(n)
        if not isinstance(plugin, LflPlugin):
            raise TypeError(f"{name} did not produce an LflPlugin")
        return plugin
    raise ValueError(f"unknown protocol {name!r}")
