"""
PoP Forwarding Engine
Strict-priority control / secure / optimized tables and per-packet decisions
"""

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
import radix
from loguru import logger

from src.exceptions import ConfigError, EmptyInputError, UnknownPopError
from src.topology.models import Address, Prefix, parse_address, parse_prefix

from .addressing import AddressCategory, AddressPlan, host_prefix
from .control import IbgpUpdate, LocalRoute, SbasControlPlane

TABLE_COLUMNS = ["tier", "prefix", "nexthop_kind", "nexthop_id"]


# =============================================================================
# Next hops
# =============================================================================

@dataclass(frozen=True)
class RouterPeer:
    address: Address
    kind = "router"

    @property
    def ident(self) -> str:
        return str(self.address)


@dataclass(frozen=True)
class RemotePop:
    pop: str
    kind = "remote_pop"

    @property
    def ident(self) -> str:
        return self.pop


@dataclass(frozen=True)
class CustomerVpn:
    customer: Hashable
    kind = "customer_vpn"

    @property
    def ident(self) -> str:
        return str(self.customer)


@dataclass(frozen=True)
class InternetNeighbor:
    asn: int
    kind = "internet"

    @property
    def ident(self) -> str:
        return str(self.asn)


NextHop = Union[RouterPeer, RemotePop, CustomerVpn, InternetNeighbor]


class Tier(Enum):
    CONTROL = "control"
    SECURE = "secure"
    OPTIMIZED = "optimized"


# =============================================================================
# Tables
# =============================================================================

class RoutingTable:
    """Longest-prefix-match table; the first entry installed for a prefix is kept."""

    def __init__(self, entries: Iterable[Tuple[Prefix, NextHop]] = ()):
        self._tree = radix.Radix()
        self._entries: Dict[Prefix, NextHop] = {}
        for prefix, next_hop in entries:
            self.add(prefix, next_hop)

    def add(self, prefix, next_hop: NextHop) -> bool:
        prefix = parse_prefix(prefix)
        if prefix in self._entries:
            if self._entries[prefix] != next_hop:
                logger.debug(f"Keeping {self._entries[prefix]} for {prefix}, ignoring {next_hop}")
            return False
        node = self._tree.add(str(prefix))
        node.data["entry"] = (prefix, next_hop)
        self._entries[prefix] = next_hop
        return True

    def lpm(self, address: Address) -> Optional[Tuple[Prefix, NextHop]]:
        node = self._tree.search_best(str(address))
        return node.data["entry"] if node is not None else None

    def entries(self) -> List[Tuple[Prefix, NextHop]]:
        return sorted(self._entries.items(), key=lambda kv: _prefix_key(kv[0]))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, prefix: object) -> bool:
        return prefix in self._entries


def _prefix_key(prefix: Prefix):
    return (prefix.version, int(prefix.network_address), prefix.prefixlen)


@dataclass(frozen=True)
class PriorityTables:
    control: RoutingTable = field(default_factory=RoutingTable)
    secure: RoutingTable = field(default_factory=RoutingTable)
    optimized: RoutingTable = field(default_factory=RoutingTable)

    def tiers(self) -> List[Tuple[Tier, RoutingTable]]:
        return [(Tier.CONTROL, self.control), (Tier.SECURE, self.secure), (Tier.OPTIMIZED, self.optimized)]


class InternalMap:
    """Exactly one (internal address, backbone locator) entry per PoP."""

    def __init__(self):
        self._by_pop: Dict[str, Tuple[Address, str]] = {}
        self._by_address: Dict[Address, str] = {}

    def add(self, pop_id: str, address: Address, locator: str) -> None:
        if pop_id in self._by_pop:
            raise ConfigError(f"PoP {pop_id!r} already has an internal map entry")
        if address in self._by_address:
            raise ConfigError(f"internal address {address} already maps to {self._by_address[address]!r}")
        self._by_pop[pop_id] = (address, locator)
        self._by_address[address] = pop_id

    def locator(self, pop_id: str) -> str:
        try:
            return self._by_pop[pop_id][1]
        except KeyError:
            raise UnknownPopError(pop_id) from None

    def address(self, pop_id: str) -> Address:
        try:
            return self._by_pop[pop_id][0]
        except KeyError:
            raise UnknownPopError(pop_id) from None

    def pop_for(self, address: Address) -> Optional[str]:
        return self._by_address.get(address)

    def __len__(self) -> int:
        return len(self._by_pop)

    def __contains__(self, pop_id: object) -> bool:
        return pop_id in self._by_pop


@dataclass(frozen=True)
class InternetRoute:
    prefix: Prefix
    neighbor: int

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_prefix(self.prefix))


def build_tables(
    ibgp_routes: Iterable[IbgpUpdate],
    local_routes: Iterable[LocalRoute],
    internet_routes: Iterable[InternetRoute],
    router_addresses: Iterable[Address],
    plan: Optional[AddressPlan] = None,
) -> PriorityTables:
    """
    Classify route feeds into the three tiers. Internet routes inside
    secure space are dropped so an outside announcement can never capture
    secure traffic.
    """
    ibgp_routes = sorted(ibgp_routes, key=lambda u: (_prefix_key(u.prefix), u.from_pop))
    local_routes = list(local_routes)
    if plan is None:
        plan = AddressPlan(secure=[u.prefix for u in ibgp_routes] + [r.prefix for r in local_routes])

    tables = PriorityTables()
    for address in sorted((parse_address(a) for a in router_addresses), key=lambda a: (a.version, int(a))):
        if plan.internal and plan.classify(address) != AddressCategory.INTERNAL:
            raise ConfigError(f"router address {address} is outside the internal address space")
        tables.control.add(host_prefix(address), RouterPeer(address))

    # local delivery wins over a remote copy of the same prefix
    for route in local_routes:
        tables.secure.add(route.prefix, CustomerVpn(route.customer))
    for update in ibgp_routes:
        tables.secure.add(update.prefix, RemotePop(update.from_pop))

    for route in sorted(internet_routes, key=lambda r: (_prefix_key(r.prefix), r.neighbor)):
        if plan.covers_secure(route.prefix):
            logger.warning(f"Dropping internet route {route.prefix} via AS{route.neighbor}: inside secure space")
            continue
        tables.optimized.add(route.prefix, InternetNeighbor(route.neighbor))

    logger.debug(
        f"Built tables: control={len(tables.control)} secure={len(tables.secure)} optimized={len(tables.optimized)}"
    )
    return tables


@dataclass(frozen=True)
class TableHit:
    tier: Tier
    prefix: Prefix
    next_hop: NextHop


def lookup_entry(tables: PriorityTables, dst) -> Optional[TableHit]:
    """Tier before length: longest match only within the first tier that covers dst."""
    address = parse_address(dst)
    for tier, table in tables.tiers():
        hit = table.lpm(address)
        if hit is not None:
            return TableHit(tier, hit[0], hit[1])
    return None


def lookup(tables: PriorityTables, dst) -> Optional[NextHop]:
    """Next hop for ``dst``, or None when no table covers it."""
    hit = lookup_entry(tables, dst)
    return hit.next_hop if hit is not None else None


def dump_tables(tables: PriorityTables) -> pd.DataFrame:
    rows = [
        {"tier": tier.value, "prefix": str(prefix), "nexthop_kind": next_hop.kind, "nexthop_id": next_hop.ident}
        for tier, table in tables.tiers()
        for prefix, next_hop in table.entries()
    ]
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


# =============================================================================
# Egress selection
# =============================================================================

@dataclass(frozen=True)
class EgressCandidate:
    pop: str
    path_length: int
    origin_history: Tuple[Tuple[float, int], ...] = ()

    def __post_init__(self):
        if self.path_length < 1:
            raise ValueError(f"path length must be at least 1, got {self.path_length}")
        object.__setattr__(self, "origin_history", tuple(sorted(self.origin_history)))

    def origin_changed_within(self, window: float, now: float) -> bool:
        history = self.origin_history
        for (_, before), (when, after) in zip(history, history[1:]):
            if before != after and 0 <= now - when <= window:
                return True
        return False


def select_egress(
    candidates: Sequence[EgressCandidate], hijack_guard: bool, window: float, now: float
) -> str:
    """Shortest AS path wins, ties to the lowest PoP id; optionally skip recently re-originated routes."""
    if not candidates:
        raise EmptyInputError("no egress candidates")
    pool = list(candidates)
    if hijack_guard:
        stable = [c for c in pool if not c.origin_changed_within(window, now)]
        if stable:
            pool = stable
        else:
            logger.warning("Every egress candidate changed origin recently; ignoring the hijack guard")
    return min(pool, key=lambda c: (c.path_length, c.pop)).pop


# =============================================================================
# Forwarding
# =============================================================================

class Action(Enum):
    DELIVER = "deliver"
    ENCAPSULATE = "encapsulate"
    EGRESS = "egress"
    DROP = "drop"


@dataclass(frozen=True)
class ExternalRoute:
    """Internet route to ``prefix`` as seen at ``pop``."""

    prefix: Prefix
    pop: str
    neighbor: int
    path_length: int
    origin_history: Tuple[Tuple[float, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_prefix(self.prefix))


@dataclass(frozen=True)
class ForwardDecision:
    action: Action
    next_hop: Optional[NextHop] = None
    tier: Optional[Tier] = None
    egress_pop: Optional[str] = None
    locator: Optional[str] = None
    inner_destination: Optional[Address] = None
    outer_destination: Optional[Address] = None


@dataclass
class PopState:
    pop_id: str
    tables: PriorityTables
    internal_map: InternalMap
    external_routes: Sequence[ExternalRoute] = ()
    vpn_endpoints: Mapping[Hashable, Address] = field(default_factory=dict)
    plan: Optional[AddressPlan] = None
    hijack_guard: bool = True
    guard_window: float = 60.0
    clock: float = 0.0


def _egress_candidates(state: PopState, dst: Address) -> Dict[str, Tuple[EgressCandidate, ExternalRoute]]:
    best: Dict[str, ExternalRoute] = {}
    for route in state.external_routes:
        if route.prefix.version != dst.version or dst not in route.prefix:
            continue
        current = best.get(route.pop)
        key = (-route.prefix.prefixlen, route.path_length, route.neighbor)
        if current is None or key < (-current.prefix.prefixlen, current.path_length, current.neighbor):
            best[route.pop] = route
    return {
        pop: (EgressCandidate(pop, route.path_length, route.origin_history), route)
        for pop, route in best.items()
    }


def forward(state: PopState, src_category: AddressCategory, dst) -> ForwardDecision:
    """Forwarding decision for one packet arriving at ``state.pop_id``."""
    address = parse_address(dst)
    hit = lookup_entry(state.tables, address)

    if hit is not None and hit.tier == Tier.CONTROL:
        if src_category != AddressCategory.INTERNAL:
            return ForwardDecision(Action.DROP, inner_destination=address)
        return ForwardDecision(Action.DELIVER, hit.next_hop, hit.tier, inner_destination=address)

    if hit is not None and hit.tier == Tier.SECURE:
        next_hop = hit.next_hop
        if isinstance(next_hop, RemotePop):
            return ForwardDecision(
                Action.ENCAPSULATE, next_hop, hit.tier,
                egress_pop=next_hop.pop,
                locator=state.internal_map.locator(next_hop.pop),
                inner_destination=address,
            )
        return ForwardDecision(
            Action.DELIVER, next_hop, hit.tier,
            egress_pop=state.pop_id,
            inner_destination=address,
            outer_destination=state.vpn_endpoints.get(next_hop.customer) if isinstance(next_hop, CustomerVpn) else None,
        )

    # secure space never leaves through an Internet neighbor
    if state.plan is not None and state.plan.classify(address) == AddressCategory.SECURE:
        logger.debug(f"{state.pop_id}: no secure route for {address}, dropping")
        return ForwardDecision(Action.DROP, inner_destination=address)

    candidates = _egress_candidates(state, address)
    if candidates:
        winner = select_egress(
            [c for c, _ in candidates.values()], state.hijack_guard, state.guard_window, state.clock
        )
        route = candidates[winner][1]
        next_hop = InternetNeighbor(route.neighbor)
        if winner == state.pop_id:
            return ForwardDecision(Action.EGRESS, next_hop, Tier.OPTIMIZED, egress_pop=winner, inner_destination=address)
        return ForwardDecision(
            Action.ENCAPSULATE, next_hop, Tier.OPTIMIZED,
            egress_pop=winner,
            locator=state.internal_map.locator(winner),
            inner_destination=address,
        )

    if hit is not None:
        return ForwardDecision(Action.EGRESS, hit.next_hop, hit.tier, egress_pop=state.pop_id, inner_destination=address)
    return ForwardDecision(Action.DROP, inner_destination=address)


# =============================================================================
# Assembly from the control plane
# =============================================================================

def internal_map_for(control: SbasControlPlane) -> InternalMap:
    mapping = InternalMap()
    for pop_id in sorted(control.pops):
        pop = control.pops[pop_id]
        mapping.add(pop_id, pop.router_address, pop.locator or str(pop.router_address))
    return mapping


def build_pop_state(
    control: SbasControlPlane,
    pop_id: str,
    internet_routes: Iterable[InternetRoute] = (),
    external_routes: Sequence[ExternalRoute] = (),
    hijack_guard: bool = True,
    guard_window: float = 60.0,
    clock: float = 0.0,
) -> PopState:
    """Tables and internal map for one PoP from the current control-plane state."""
    routers = [control.pops[p].router_address for p in sorted(control.pops) if p != pop_id]
    tables = build_tables(
        control.ibgp_routes(pop_id), control.local_routes(pop_id), internet_routes, routers, control.plan
    )
    endpoints = {c.asn: c.vpn_endpoint for c in control.customers.values() if c.vpn_endpoint is not None}
    kept = []
    for route in external_routes:
        if control.plan.covers_secure(route.prefix):
            logger.warning(f"Dropping external route {route.prefix} via AS{route.neighbor} at {route.pop}: "
                           f"inside secure space")
            continue
        kept.append(route)
    return PopState(
        pop_id=pop_id,
        tables=tables,
        internal_map=internal_map_for(control),
        external_routes=tuple(kept),
        vpn_endpoints=endpoints,
        plan=control.plan,
        hijack_guard=hijack_guard,
        guard_window=guard_window,
        clock=clock,
    )


class PopEngine:
    """Holds the installed tables; readers see a whole epoch, never a mix."""

    def __init__(self, state: PopState):
        self._lock = threading.Lock()
        self._state = state
        self._epoch = 0

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def state(self) -> PopState:
        return self._state

    def install(self, state: PopState) -> int:
        if state.pop_id != self._state.pop_id:
            raise ConfigError(f"cannot install tables of {state.pop_id!r} into {self._state.pop_id!r}")
        with self._lock:
            self._state = state
            self._epoch += 1
            return self._epoch

    def forward(self, src_category: AddressCategory, dst) -> ForwardDecision:
        return forward(self._state, src_category, dst)
