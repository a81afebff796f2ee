"""
SBAS Control Plane
Ingress validation, full-mesh iBGP redistribution, PoP authorization and egress policy
"""

import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import radix
from loguru import logger

from src.exceptions import ConfigError, UnknownPopError
from src.topology.models import Address, Prefix, parse_prefix

from .addressing import AddressCategory, AddressPlan, AddressPool, check_secure_prefix


# =============================================================================
# Records and messages
# =============================================================================

@dataclass(frozen=True)
class RoaRecord:
    prefix: Prefix
    origin: int
    max_length: int

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_prefix(self.prefix))
        if not self.prefix.prefixlen <= self.max_length <= self.prefix.max_prefixlen:
            raise ConfigError(
                f"ROA {self.prefix} max_length {self.max_length} outside "
                f"[{self.prefix.prefixlen}, {self.prefix.max_prefixlen}]"
            )
        if self.origin <= 0:
            raise ConfigError(f"ROA {self.prefix} has invalid origin {self.origin}")


class RoaIndex:
    """ROA records indexed by prefix for covering lookups."""

    def __init__(self, records: Iterable[RoaRecord] = ()):
        self._tree = radix.Radix()
        self._records: List[RoaRecord] = []
        for record in records:
            self.add(record)

    def add(self, record: RoaRecord) -> None:
        node = self._tree.add(str(record.prefix))
        node.data.setdefault("roas", []).append(record)
        self._records.append(record)

    def covering(self, prefix: Prefix) -> List[RoaRecord]:
        found: List[RoaRecord] = []
        for node in self._tree.search_covering(str(prefix)):
            found.extend(node.data["roas"])
        return found

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)


class SbasCommunity(Enum):
    # Redistribute to SBAS customers only, never to Internet peers
    SBAS_ONLY = "sbas-only"


@dataclass(frozen=True)
class CustomerAnnouncement:
    prefix: Prefix
    as_path: Tuple[int, ...]
    ingress_pop: str
    customer: int
    communities: FrozenSet[SbasCommunity] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "prefix", parse_prefix(self.prefix))
        object.__setattr__(self, "as_path", tuple(self.as_path))
        object.__setattr__(self, "communities", frozenset(SbasCommunity(c) for c in self.communities))
        if not self.as_path:
            raise ValueError(f"announcement for {self.prefix} has an empty AS path")

    @property
    def origin(self) -> int:
        return self.as_path[-1]


@dataclass(frozen=True)
class PopConfig:
    id: str
    sbas_asn: int
    internal_prefix: Prefix
    internet_peers: FrozenSet[int] = frozenset()
    customers: FrozenSet[int] = frozenset()
    locator: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "internal_prefix", parse_prefix(self.internal_prefix))
        object.__setattr__(self, "internet_peers", frozenset(self.internet_peers))
        object.__setattr__(self, "customers", frozenset(self.customers))

    @property
    def router_address(self) -> Address:
        """First host of the internal prefix; the PoP's iBGP next hop."""
        if self.internal_prefix.num_addresses == 1:
            return self.internal_prefix.network_address
        return self.internal_prefix.network_address + 1


@dataclass(frozen=True)
class PopAuthorization:
    """Per-prefix set of PoPs allowed to redistribute; absent prefix means all."""

    records: Mapping[Prefix, FrozenSet[str]] = field(default_factory=dict)

    def authorized(self, prefix: Prefix) -> Optional[FrozenSet[str]]:
        return self.records.get(prefix)


@dataclass(frozen=True)
class IbgpUpdate:
    prefix: Prefix
    origin: int
    customer: Hashable
    from_pop: str
    to_pop: str
    as_path: Tuple[int, ...]
    communities: FrozenSet[SbasCommunity] = frozenset()

    @property
    def sbas_only(self) -> bool:
        return SbasCommunity.SBAS_ONLY in self.communities


@dataclass(frozen=True)
class EgressTargets:
    customers: FrozenSet[int]
    internet: FrozenSet[int]


@dataclass(frozen=True)
class ExternalAnnouncement:
    prefix: Prefix
    as_path: Tuple[int, ...]


class RejectReason(Enum):
    NO_ROA = "NoRoa"
    ORIGIN_MISMATCH = "OriginMismatch"
    MAX_LENGTH_EXCEEDED = "MaxLengthExceeded"
    FOREIGN_ASN_IN_PATH = "ForeignAsnInPath"


@dataclass(frozen=True)
class ValidationResult:
    reason: Optional[RejectReason] = None

    @property
    def valid(self) -> bool:
        return self.reason is None

    def __str__(self) -> str:
        return "Validated" if self.valid else f"Rejected({self.reason.value})"


VALIDATED = ValidationResult()


# =============================================================================
# Pure policy functions
# =============================================================================

def validate_ingress(ann: CustomerAnnouncement, roas) -> ValidationResult:
    """
    Accept an announcement only if its path is the origin ASN (prepending
    allowed) and a ROA for that origin covers the prefix within max_length.
    """
    origin = ann.origin
    if any(asn != origin for asn in ann.as_path):
        return ValidationResult(RejectReason.FOREIGN_ASN_IN_PATH)

    index = roas if isinstance(roas, RoaIndex) else RoaIndex(roas)
    covering = index.covering(ann.prefix)
    if not covering:
        return ValidationResult(RejectReason.NO_ROA)
    matching = [roa for roa in covering if roa.origin == origin]
    if not matching:
        return ValidationResult(RejectReason.ORIGIN_MISMATCH)
    if any(ann.prefix.prefixlen <= roa.max_length for roa in matching):
        return VALIDATED
    return ValidationResult(RejectReason.MAX_LENGTH_EXCEEDED)


def check_pop_authorization(update: IbgpUpdate, auth: PopAuthorization) -> bool:
    allowed = auth.authorized(update.prefix)
    return allowed is None or update.from_pop in allowed


def redistribute(ann: CustomerAnnouncement, pops: Iterable[PopConfig]) -> List[IbgpUpdate]:
    """One iBGP update per PoP other than the ingress, ordered by PoP id."""
    pop_ids = sorted({pop.id for pop in pops})
    if ann.ingress_pop not in pop_ids:
        raise UnknownPopError(ann.ingress_pop)
    return [
        IbgpUpdate(
            prefix=ann.prefix,
            origin=ann.origin,
            customer=ann.customer,
            from_pop=ann.ingress_pop,
            to_pop=pop_id,
            as_path=ann.as_path,
            communities=ann.communities,
        )
        for pop_id in pop_ids
        if pop_id != ann.ingress_pop
    ]


def egress_targets(update: IbgpUpdate, pop: PopConfig, auth: PopAuthorization) -> EgressTargets:
    if not check_pop_authorization(update, auth):
        return EgressTargets(frozenset(), frozenset())
    internet = frozenset() if update.sbas_only else pop.internet_peers
    return EgressTargets(pop.customers, internet)


def make_egress_announcement(update: IbgpUpdate, sbas_asn: int) -> ExternalAnnouncement:
    """SBAS ASN prepended to the received path; SBAS-owned space is originated by SBAS."""
    if update.origin == sbas_asn:
        return ExternalAnnouncement(update.prefix, (sbas_asn,))
    return ExternalAnnouncement(update.prefix, (sbas_asn,) + update.as_path)


def _as_announcement(update: IbgpUpdate) -> CustomerAnnouncement:
    return CustomerAnnouncement(
        prefix=update.prefix,
        as_path=update.as_path,
        ingress_pop=update.from_pop,
        customer=update.origin,
        communities=update.communities,
    )


# =============================================================================
# Stateful control plane
# =============================================================================

@dataclass(frozen=True)
class CustomerConfig:
    asn: int
    prefixes: Tuple[Prefix, ...]
    primary_ingress: str
    backup_ingress: Tuple[str, ...] = ()
    communities: FrozenSet[SbasCommunity] = frozenset()
    vpn_endpoint: Optional[Address] = None

    def __post_init__(self):
        object.__setattr__(self, "prefixes", tuple(parse_prefix(p) for p in self.prefixes))
        object.__setattr__(self, "backup_ingress", tuple(self.backup_ingress))
        object.__setattr__(self, "communities", frozenset(SbasCommunity(c) for c in self.communities))


@dataclass(frozen=True)
class EgressEntry:
    update: IbgpUpdate
    targets: EgressTargets
    external: Optional[ExternalAnnouncement]


@dataclass
class AnnouncementOutcome:
    announcement: CustomerAnnouncement
    validation: ValidationResult
    updates: List[IbgpUpdate] = field(default_factory=list)
    accepted_at: List[str] = field(default_factory=list)
    rejected_at: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class LocalRoute:
    prefix: Prefix
    customer: Hashable


class SbasControlPlane:
    """
    Control plane of one SBAS deployment.

    Customer announcements are validated at their active ingress PoP,
    redistributed over the full mesh, re-validated and authorization
    checked at every receiving PoP, then exported per egress policy.
    """

    def __init__(
        self,
        sbas_asn: int,
        pops: Sequence[PopConfig],
        customers: Sequence[CustomerConfig] = (),
        roas: Iterable[RoaRecord] = (),
        authorization: Optional[PopAuthorization] = None,
        pool: Optional[Prefix] = None,
    ):
        self.sbas_asn = sbas_asn
        self.pops: Dict[str, PopConfig] = {}
        for pop in pops:
            if pop.id in self.pops:
                raise ConfigError(f"duplicate PoP id {pop.id!r}")
            self.pops[pop.id] = pop
        if not self.pops:
            raise ConfigError("deployment has no PoPs")

        internal = [pop.internal_prefix for pop in self.pops.values()]
        for i, a in enumerate(internal):
            for b in internal[i + 1:]:
                if a.version == b.version and a.overlaps(b):
                    raise ConfigError(f"PoP internal prefixes {a} and {b} overlap")

        self.customers: Dict[int, CustomerConfig] = {}
        for customer in customers:
            if customer.asn in self.customers:
                raise ConfigError(f"duplicate customer AS{customer.asn}")
            for pop_id in (customer.primary_ingress,) + customer.backup_ingress:
                if pop_id not in self.pops:
                    raise UnknownPopError(pop_id)
            for prefix in customer.prefixes:
                check_secure_prefix(prefix)
            self.customers[customer.asn] = customer

        self.roas = RoaIndex(roas)
        self.authorization = authorization or PopAuthorization()
        self.pool: Optional[AddressPool] = None
        secure: List[Prefix] = [p for c in self.customers.values() for p in c.prefixes]
        if pool is not None:
            self.pool = AddressPool(check_secure_prefix(pool))
            secure.append(self.pool.prefix)
            # SBAS-owned space validates like any customer prefix
            self.roas.add(RoaRecord(self.pool.prefix, sbas_asn, self.pool.prefix.max_prefixlen))
        self.plan = AddressPlan(secure=secure, internal=internal)

        for customer in self.customers.values():
            if customer.vpn_endpoint is not None and self.plan.classify(customer.vpn_endpoint) == AddressCategory.SECURE:
                raise ConfigError(f"VPN endpoint {customer.vpn_endpoint} of AS{customer.asn} is a secure address")

        self._failed: Set[str] = set()
        self._active_ingress: Dict[int, Optional[str]] = {c.asn: c.primary_ingress for c in self.customers.values()}
        self._validated: Dict[Tuple[int, Prefix], CustomerAnnouncement] = {}
        self._ibgp: Dict[str, Dict[Tuple[Prefix, str], IbgpUpdate]] = {pop_id: {} for pop_id in self.pops}
        self._assigned_at: Dict[Hashable, str] = {}
        self._lock = threading.RLock()

    # -------------------------------------------------------------------------
    # Queries
    # -------------------------------------------------------------------------

    def pop(self, pop_id: str) -> PopConfig:
        try:
            return self.pops[pop_id]
        except KeyError:
            raise UnknownPopError(pop_id) from None

    @property
    def live_pops(self) -> List[PopConfig]:
        return [self.pops[p] for p in sorted(self.pops) if p not in self._failed]

    def active_ingress(self, customer: int) -> Optional[str]:
        return self._active_ingress.get(customer)

    def attached_pop(self, pop_id: str) -> PopConfig:
        """PoP config with its customer set reflecting current ingress assignments."""
        pop = self.pop(pop_id)
        attached = {asn for asn, active in self._active_ingress.items() if active == pop_id}
        attached |= {asn for asn in pop.customers if asn not in self.customers}
        return replace(pop, customers=frozenset(attached))

    def ibgp_routes(self, pop_id: str) -> List[IbgpUpdate]:
        self.pop(pop_id)
        return sorted(self._ibgp[pop_id].values(), key=lambda u: (str(u.prefix), u.from_pop))

    def local_routes(self, pop_id: str) -> List[LocalRoute]:
        self.pop(pop_id)
        routes = [
            LocalRoute(ann.prefix, ann.customer)
            for ann in self._validated.values()
            if self._active_ingress.get(ann.customer) == pop_id
        ]
        routes += [
            LocalRoute(prefix, customer)
            for customer, prefix in (self.pool.assignments.items() if self.pool else [])
            if self._assigned_at.get(customer) == pop_id
        ]
        return sorted(routes, key=lambda r: (r.prefix.version, int(r.prefix.network_address), r.prefix.prefixlen))

    def egress_plan(self, pop_id: str) -> List[EgressEntry]:
        pop = self.attached_pop(pop_id)
        entries = []
        for update in self.ibgp_routes(pop_id):
            targets = egress_targets(update, pop, self.authorization)
            external = make_egress_announcement(update, self.sbas_asn) if targets.internet else None
            entries.append(EgressEntry(update, targets, external))
        return entries

    # -------------------------------------------------------------------------
    # Announcements
    # -------------------------------------------------------------------------

    def _deliver(self, outcome: AnnouncementOutcome, updates: List[IbgpUpdate], revalidate: bool) -> None:
        for update in updates:
            if update.to_pop in self._failed:
                continue
            if revalidate:
                check = validate_ingress(_as_announcement(update), self.roas)
                if not check.valid:
                    outcome.rejected_at[update.to_pop] = str(check)
                    logger.warning(f"{update.to_pop}: dropping {update.prefix} from {update.from_pop}: {check}")
                    continue
            if not check_pop_authorization(update, self.authorization):
                outcome.rejected_at[update.to_pop] = "Unauthorized"
                logger.warning(f"{update.to_pop}: {update.from_pop} is not authorized for {update.prefix}")
                continue
            self._ibgp[update.to_pop][(update.prefix, update.from_pop)] = update
            outcome.accepted_at.append(update.to_pop)

    def announce(
        self,
        customer: int,
        prefix,
        as_path: Optional[Sequence[int]] = None,
        communities: Optional[Iterable[SbasCommunity]] = None,
    ) -> AnnouncementOutcome:
        """Process one customer announcement at the customer's active ingress PoP."""
        config = self.customers.get(customer)
        if config is None:
            raise ConfigError(f"AS{customer} is not a configured customer")
        with self._lock:
            ingress = self._active_ingress[customer]
            if ingress is None:
                raise UnknownPopError(f"<no live ingress for AS{customer}>")

            ann = CustomerAnnouncement(
                prefix=parse_prefix(prefix),
                as_path=tuple(as_path) if as_path else (customer,),
                ingress_pop=ingress,
                customer=customer,
                communities=config.communities if communities is None else frozenset(communities),
            )
            outcome = AnnouncementOutcome(ann, validate_ingress(ann, self.roas))
            if not outcome.validation.valid:
                logger.warning(f"{ingress}: rejected {ann.prefix} from AS{customer}: {outcome.validation}")
                return outcome

            self._validated[(customer, ann.prefix)] = ann
            outcome.updates = redistribute(ann, self.live_pops)
            self._deliver(outcome, outcome.updates, revalidate=True)
        logger.debug(f"{ingress}: {ann.prefix} from AS{customer} accepted at {len(outcome.accepted_at)} PoPs")
        return outcome

    def announce_all(self) -> List[AnnouncementOutcome]:
        """Announce every configured customer prefix with origin-only paths."""
        outcomes = []
        for asn in sorted(self.customers):
            if self._active_ingress[asn] is None:
                continue
            for prefix in self.customers[asn].prefixes:
                outcomes.append(self.announce(asn, prefix))
        return outcomes

    # -------------------------------------------------------------------------
    # Secure addresses
    # -------------------------------------------------------------------------

    def assign_address(self, customer: Hashable, pop_id: str) -> Prefix:
        """
        Assign a secure host address at ``pop_id`` and announce it to the
        other PoPs. A holder already announced keeps its address and PoP; one
        assigned straight from the pool, or stranded by a failover, is
        announced from ``pop_id``.
        """
        if self.pool is None:
            raise ConfigError("deployment has no secure address pool")
        self.pop(pop_id)
        with self._lock:
            if pop_id in self._failed:
                raise ConfigError(f"PoP {pop_id!r} is out of service")
            prefix = self.pool.assign(customer)
            if customer in self._assigned_at:
                return prefix
            self._assigned_at[customer] = pop_id
            updates = self._announce_host(customer, prefix, pop_id, revalidate=True)
        logger.info(f"{pop_id}: assigned {prefix} to {customer}, notified {len(updates)} PoPs")
        return prefix

    def _announce_host(self, customer: Hashable, prefix: Prefix, pop_id: str, revalidate: bool) -> List[IbgpUpdate]:
        ann = CustomerAnnouncement(prefix, (self.sbas_asn,), pop_id, self.sbas_asn)
        updates = [replace(u, customer=customer) for u in redistribute(ann, self.live_pops)]
        self._deliver(AnnouncementOutcome(ann, VALIDATED, updates), updates, revalidate=revalidate)
        return updates

    # -------------------------------------------------------------------------
    # Failover
    # -------------------------------------------------------------------------

    def fail_pop(self, pop_id: str) -> Dict[int, Optional[str]]:
        """
        Take a PoP out of service. Customers homed there move to their first
        live backup ingress; their already validated prefixes and any pool
        address are re-announced from the new ingress without re-validation.
        Returns the moves.
        """
        self.pop(pop_id)
        with self._lock:
            if pop_id in self._failed:
                return {}
            self._failed.add(pop_id)
            self._ibgp[pop_id].clear()
            for routes in self._ibgp.values():
                for key in [k for k, u in routes.items() if u.from_pop == pop_id]:
                    del routes[key]

            moved: Dict[int, Optional[str]] = {}
            for asn in sorted(self.customers):
                if self._active_ingress[asn] != pop_id:
                    continue
                config = self.customers[asn]
                backup = next((p for p in config.backup_ingress if p not in self._failed), None)
                self._active_ingress[asn] = backup
                moved[asn] = backup
                if backup is None:
                    logger.warning(f"AS{asn} lost its last live ingress with {pop_id}")
                    continue
                logger.info(f"AS{asn}: failover {pop_id} -> {backup}")
                for (owner, prefix), ann in sorted(self._validated.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
                    if owner != asn:
                        continue
                    moved_ann = replace(ann, ingress_pop=backup)
                    self._validated[(owner, prefix)] = moved_ann
                    updates = redistribute(moved_ann, self.live_pops)
                    self._deliver(AnnouncementOutcome(moved_ann, VALIDATED, updates), updates, revalidate=False)

            self._move_assignments(pop_id)
        return moved

    def _move_assignments(self, pop_id: str) -> None:
        """Pool addresses held at a failed PoP follow their customer's new ingress."""
        assignments = self.pool.assignments if self.pool is not None else {}
        stranded = sorted((h for h, p in self._assigned_at.items() if p == pop_id), key=str)
        for holder in stranded:
            target = self._active_ingress.get(holder)
            if target is None:
                del self._assigned_at[holder]
                logger.warning(f"{assignments[holder]} of {holder} has no live PoP after {pop_id} failed")
                continue
            self._assigned_at[holder] = target
            self._announce_host(holder, assignments[holder], target, revalidate=False)
            logger.info(f"{assignments[holder]} of {holder}: failover {pop_id} -> {target}")
