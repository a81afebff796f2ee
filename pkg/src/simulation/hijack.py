"""
Hijack Scenario Simulation
Equally-specific prefix hijack against a set of announcing victim nodes
"""

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping

from src.exceptions import ScenarioError, UnknownAsError
from src.topology.models import Prefix, Topology

from .propagation import DEFAULT_PREFIX, OriginKind, RibOutcome, Seed, propagate
from .tiebreak import TiebreakPolicy


class Reachability(Enum):
    ROUTES_TO_VICTIM = "victim"
    ROUTES_TO_ATTACKER = "attacker"
    NO_ROUTE = "none"


@dataclass(frozen=True)
class HijackOutcome:
    rib: RibOutcome
    classification: Mapping[int, Reachability]

    def of(self, asn: int) -> Reachability:
        return self.classification.get(asn, Reachability.NO_ROUTE)

    def counts(self) -> Dict[Reachability, int]:
        counter = Counter(self.classification.values())
        return {state: counter.get(state, 0) for state in Reachability}


def hijack_seeds(victim_nodes: Iterable[int], attacker: int, legit_origin: int, rov: bool):
    """
    Seeds for one attack. Under ROV the attacker must forge the legitimate
    origin behind itself, which costs it one extra AS hop.
    """
    seeds = [Seed.at(v, OriginKind.victim(v)) for v in sorted(set(victim_nodes))]
    attacker_path = (attacker, legit_origin) if rov else (attacker,)
    seeds.append(Seed(attacker, attacker_path, OriginKind.attacker()))
    return seeds


def simulate_hijack(
    topology: Topology,
    victim_nodes: Iterable[int],
    attacker: int,
    legit_origin: int,
    rov: bool,
    tiebreak: TiebreakPolicy,
    prefix: Prefix = DEFAULT_PREFIX,
) -> HijackOutcome:
    """Propagate victim and attacker announcements together and classify every AS."""
    victims = frozenset(victim_nodes)
    if not victims:
        raise ScenarioError("at least one victim node is required")
    if attacker in victims:
        raise ScenarioError(f"attacker AS{attacker} is also a victim node")
    for asn in sorted(victims | {attacker}):
        if asn not in topology:
            raise UnknownAsError(asn)
    if legit_origin <= 0:
        raise ScenarioError(f"invalid legitimate origin {legit_origin}")

    rib = propagate(topology, hijack_seeds(victims, attacker, legit_origin, rov), tiebreak, prefix)

    classification: Dict[int, Reachability] = {}
    for asn in topology.nodes:
        route = rib.route(asn)
        if route is None:
            classification[asn] = Reachability.NO_ROUTE
        elif route.origin_kind.is_attacker:
            classification[asn] = Reachability.ROUTES_TO_ATTACKER
        else:
            classification[asn] = Reachability.ROUTES_TO_VICTIM
    return HijackOutcome(rib, classification)
