"""
Route Tiebreak Policies
Deterministic or seeded choice among equally preferred routes
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from src.topology.models import Topology

_U64 = (1 << 64) - 1

# (deciding ASN, next-hop ASN) -> sort key; lower wins
Ranker = Callable[[int, int], float]


def derive_seed(base: int, *indices: int) -> int:
    """Stable 64-bit seed for a scenario index, independent of scheduling."""
    entropy = [base & _U64] + [int(i) & _U64 for i in indices]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


class TiebreakPolicy(ABC):
    """Breaks ties among candidates with equal route class and path length."""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def ranker(self, topology: Topology) -> Ranker:
        """Return a ranking function for one propagation run."""
        pass

    def for_scenario(self, *indices: int) -> "TiebreakPolicy":
        """Policy instance for one (attacker, trial) scenario."""
        return self


@dataclass(frozen=True)
class LowestNextHopAsn(TiebreakPolicy):
    """Prefer the candidate learned from the lowest neighbor ASN."""

    @property
    def name(self) -> str:
        return "lowest-asn"

    def ranker(self, topology: Topology) -> Ranker:
        return lambda deciding, next_hop: next_hop


@dataclass(frozen=True)
class SeededRandom(TiebreakPolicy):
    """
    Uniform choice among tied candidates.

    Each deciding AS gets its own Philox stream keyed on (seed, ASN) and
    draws one uniform rank per neighbor, so the outcome of a tie does not
    depend on the order in which other ASes were processed.
    """

    seed: int

    @property
    def name(self) -> str:
        return "random"

    def for_scenario(self, *indices: int) -> "SeededRandom":
        return SeededRandom(derive_seed(self.seed, *indices))

    def ranker(self, topology: Topology) -> Ranker:
        ranks: Dict[int, Dict[int, float]] = {}
        seed = self.seed & _U64

        def rank(deciding: int, next_hop: int) -> float:
            table = ranks.get(deciding)
            if table is None:
                neighbors = topology.neighbors(deciding)
                key = np.array([seed, deciding & _U64], dtype=np.uint64)
                draws = np.random.Generator(np.random.Philox(key=key)).random(len(neighbors))
                table = dict(zip(neighbors, draws.tolist()))
                ranks[deciding] = table
            return table[next_hop]

        return rank


def tiebreak_from_name(name: str, seed: int) -> TiebreakPolicy:
    """Map a CLI / settings name to a policy."""
    normalized = name.strip().lower().replace("_", "-")
    if normalized in ("random", "seeded-random"):
        return SeededRandom(seed)
    if normalized in ("lowest-asn", "lowest-next-hop-asn", "deterministic"):
        return LowestNextHopAsn()
    raise ValueError(f"unknown tiebreak policy {name!r} (use 'random' or 'lowest-asn')")
