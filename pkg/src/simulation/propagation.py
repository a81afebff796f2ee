"""
Policy-compliant Route Propagation
Gao-Rexford three-stage propagation of competing announcements
"""

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from src.exceptions import ScenarioError, UnknownAsError
from src.topology.models import Prefix, Topology, parse_prefix

from .tiebreak import Ranker, TiebreakPolicy

# Documentation prefix used when a caller does not name one.
DEFAULT_PREFIX = parse_prefix("192.0.2.0/24")


class RouteClass(Enum):
    """Relationship over which a route was learned."""

    ORIGIN = "origin"
    CUSTOMER = "customer"
    PEER = "peer"
    PROVIDER = "provider"

    @property
    def preference(self) -> int:
        return _PREFERENCE[self]

    @property
    def exported_to_everyone(self) -> bool:
        """Origin and customer routes go to all neighbors; the rest only to customers."""
        return self in (RouteClass.ORIGIN, RouteClass.CUSTOMER)


_PREFERENCE = {
    RouteClass.ORIGIN: 3,
    RouteClass.CUSTOMER: 3,
    RouteClass.PEER: 2,
    RouteClass.PROVIDER: 1,
}


@dataclass(frozen=True)
class OriginKind:
    """Who originated an announcement: a victim node or the attacker."""

    is_attacker: bool
    node: Optional[int] = None

    @classmethod
    def victim(cls, asn: int) -> "OriginKind":
        return cls(False, asn)

    @classmethod
    def attacker(cls) -> "OriginKind":
        return cls(True, None)

    def __str__(self) -> str:
        return "attacker" if self.is_attacker else f"victim:AS{self.node}"


@dataclass(frozen=True)
class Route:
    dest: Prefix
    as_path: Tuple[int, ...]
    route_class: RouteClass
    origin_kind: OriginKind

    @property
    def length(self) -> int:
        return len(self.as_path)

    @property
    def next_hop(self) -> Optional[int]:
        return self.as_path[1] if len(self.as_path) > 1 else None

    @property
    def origin(self) -> int:
        return self.as_path[-1]


@dataclass(frozen=True)
class Seed:
    """An announcement entering the simulation at ``asn`` with ``path``."""

    asn: int
    path: Tuple[int, ...]
    kind: OriginKind

    @classmethod
    def at(cls, asn: int, kind: OriginKind, path: Optional[Sequence[int]] = None) -> "Seed":
        return cls(asn, tuple(path) if path else (asn,), kind)


class RibOutcome:
    """Per-AS chosen route after propagation (absent = no route)."""

    def __init__(self, routes: Dict[int, Route]):
        self._routes = routes

    def route(self, asn: int) -> Optional[Route]:
        return self._routes.get(asn)

    def __getitem__(self, asn: int) -> Route:
        return self._routes[asn]

    def __contains__(self, asn: object) -> bool:
        return asn in self._routes

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._routes))

    def __len__(self) -> int:
        return len(self._routes)

    def items(self) -> List[Tuple[int, Route]]:
        return sorted(self._routes.items())


def _validate_seeds(topology: Topology, seeds: Iterable[Seed]) -> List[Seed]:
    seeds = list(seeds)
    if not seeds:
        raise ScenarioError("propagation needs at least one seed")
    seen = set()
    for seed in seeds:
        if seed.asn not in topology:
            raise UnknownAsError(seed.asn)
        if seed.asn in seen:
            raise ScenarioError(f"AS{seed.asn} is seeded twice")
        if not seed.path or seed.path[0] != seed.asn:
            raise ScenarioError(f"seed path {seed.path} must start at AS{seed.asn}")
        seen.add(seed.asn)
    return seeds


def _spread(
    rib: Dict[int, Route],
    exporters: Iterable[int],
    neighbors_of: Callable[[int], Tuple[int, ...]],
    route_class: RouteClass,
    rank: Ranker,
) -> None:
    """
    Breadth-first-by-length spread along one edge direction.

    Exporters are processed in buckets of equal path length; receivers
    collected from a bucket are final once the bucket is done, because
    every later offer is at least one hop longer.
    """
    heap = [(rib[asn].length, asn) for asn in exporters]
    heapq.heapify(heap)
    pending: Dict[int, Tuple[Tuple[int, float], Route]] = {}

    while heap:
        length = heap[0][0]
        while heap and heap[0][0] == length:
            _, exporter = heapq.heappop(heap)
            route = rib[exporter]
            for receiver in neighbors_of(exporter):
                if receiver in rib or receiver in route.as_path:
                    continue
                key = (length + 1, rank(receiver, exporter))
                best = pending.get(receiver)
                if best is None or key < best[0]:
                    pending[receiver] = (
                        key,
                        Route(route.dest, (receiver,) + route.as_path, route_class, route.origin_kind),
                    )

        for receiver, (key, route) in pending.items():
            rib[receiver] = route
            heapq.heappush(heap, (key[0], receiver))
        pending.clear()


def propagate(
    topology: Topology,
    seeds: Iterable[Seed],
    tiebreak: TiebreakPolicy,
    prefix: Prefix = DEFAULT_PREFIX,
) -> RibOutcome:
    """
    Jointly propagate all seeded announcements for one prefix.

    Stage 1 climbs customer->provider links, stage 2 crosses each peer
    link once from ASes holding origin/customer routes, stage 3 descends
    provider->customer links from every AS holding a route. Selection:
    class preference, then shorter path, then the tiebreak policy.
    """
    seeds = _validate_seeds(topology, seeds)
    rank = tiebreak.ranker(topology)

    rib: Dict[int, Route] = {
        seed.asn: Route(prefix, seed.path, RouteClass.ORIGIN, seed.kind) for seed in seeds
    }

    # Stage 1: customer routes
    _spread(rib, list(rib), topology.providers, RouteClass.CUSTOMER, rank)

    # Stage 2: one peer hop
    offers: Dict[int, Tuple[Tuple[int, float], Route]] = {}
    for exporter in sorted(rib):
        route = rib[exporter]
        for receiver in topology.peers(exporter):
            if receiver in rib or receiver in route.as_path:
                continue
            key = (route.length + 1, rank(receiver, exporter))
            best = offers.get(receiver)
            if best is None or key < best[0]:
                offers[receiver] = (key, Route(prefix, (receiver,) + route.as_path, RouteClass.PEER, route.origin_kind))
    for receiver, (_, route) in offers.items():
        rib[receiver] = route

    # Stage 3: provider routes
    _spread(rib, list(rib), topology.customers, RouteClass.PROVIDER, rank)

    return RibOutcome(rib)
