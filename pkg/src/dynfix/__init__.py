"""Dynamic distributed fixing of locally checkable labelings under topology churn."""

from .dyngraph import EventKind, Snapshot, TopologyEvent
from .engine import Engine, RoundStats
from .protocols import PROTOCOLS, make_plugin
from .simulation import RunConfig, simulate

__version__ = "0.1.0"

__all__ = ["EventKind", "Snapshot", "TopologyEvent", "Engine", "RoundStats", "PROTOCOLS", "make_plugin",
           "RunConfig", "simulate"]
