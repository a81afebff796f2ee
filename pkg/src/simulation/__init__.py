# Simulation module
from .hijack import HijackOutcome, Reachability, hijack_seeds, simulate_hijack
from .propagation import DEFAULT_PREFIX, OriginKind, RibOutcome, Route, RouteClass, Seed, propagate
from .tiebreak import LowestNextHopAsn, SeededRandom, TiebreakPolicy, derive_seed, tiebreak_from_name

__all__ = [
    "DEFAULT_PREFIX",
    "HijackOutcome",
    "LowestNextHopAsn",
    "OriginKind",
    "Reachability",
    "RibOutcome",
    "Route",
    "RouteClass",
    "Seed",
    "SeededRandom",
    "TiebreakPolicy",
    "derive_seed",
    "hijack_seeds",
    "propagate",
    "simulate_hijack",
    "tiebreak_from_name",
]
