"""
SBAS Address Space
Secure / Internal / Global address categories and the secure address pool
"""

import ipaddress
import threading
from enum import Enum
from typing import Dict, Hashable, Iterable, Tuple

import radix
from loguru import logger

from src.exceptions import ConfigError, PoolExhaustedError
from src.topology.models import Address, Prefix, parse_address, parse_prefix

MAX_SECURE_V4_PREFIXLEN = 24


class AddressCategory(Enum):
    SECURE = "secure"
    INTERNAL = "internal"
    GLOBAL = "global"


def host_prefix(address: Address) -> Prefix:
    return ipaddress.ip_network(f"{address}/{address.max_prefixlen}")


class AddressPlan:
    """
    Secure prefixes (customer space plus the SBAS pool) and PoP-internal
    prefixes. Everything not covered by either is Global.
    """

    def __init__(self, secure: Iterable[Prefix] = (), internal: Iterable[Prefix] = ()):
        self.secure: Tuple[Prefix, ...] = tuple(sorted({parse_prefix(p) for p in secure}, key=_prefix_key))
        self.internal: Tuple[Prefix, ...] = tuple(sorted({parse_prefix(p) for p in internal}, key=_prefix_key))

        for s in self.secure:
            for i in self.internal:
                if s.version == i.version and s.overlaps(i):
                    raise ConfigError(f"secure prefix {s} overlaps internal prefix {i}")

        self._secure_tree = radix.Radix()
        for prefix in self.secure:
            self._secure_tree.add(str(prefix))
        self._internal_tree = radix.Radix()
        for prefix in self.internal:
            self._internal_tree.add(str(prefix))

    def covers_secure(self, prefix: Prefix) -> bool:
        """True if ``prefix`` lies inside some secure prefix."""
        return bool(self._secure_tree.search_covering(str(prefix)))

    def classify(self, address: Address) -> AddressCategory:
        addr = str(address)
        if self._secure_tree.search_best(addr) is not None:
            return AddressCategory.SECURE
        if self._internal_tree.search_best(addr) is not None:
            return AddressCategory.INTERNAL
        return AddressCategory.GLOBAL


def classify_address(address, plan: AddressPlan) -> AddressCategory:
    return plan.classify(parse_address(address))


def check_secure_prefix(prefix) -> Prefix:
    """Secure v4 prefixes must be /24 or shorter; longer ones are filtered on the Internet."""
    prefix = parse_prefix(prefix)
    if prefix.version == 4 and prefix.prefixlen > MAX_SECURE_V4_PREFIXLEN:
        raise ConfigError(f"secure prefix {prefix} is longer than /{MAX_SECURE_V4_PREFIXLEN}")
    return prefix


def _prefix_key(prefix: Prefix):
    return (prefix.version, int(prefix.network_address), prefix.prefixlen)


class AddressPool:
    """
    SBAS-owned secure prefix handing out single host addresses.

    Assignment is serialized by a lock; the all-zeros and all-ones hosts
    are never handed out.
    """

    def __init__(self, prefix):
        self.prefix: Prefix = parse_prefix(prefix)
        if self.prefix.num_addresses < 3:
            raise ConfigError(f"pool {self.prefix} has no usable host addresses")
        self._lock = threading.Lock()
        self._assignments: Dict[Hashable, Prefix] = {}
        self._next_offset = 1

    @property
    def capacity(self) -> int:
        return self.prefix.num_addresses - 2

    @property
    def assignments(self) -> Dict[Hashable, Prefix]:
        with self._lock:
            return dict(self._assignments)

    def assign(self, customer: Hashable) -> Prefix:
        with self._lock:
            existing = self._assignments.get(customer)
            if existing is not None:
                return existing
            if self._next_offset > self.capacity:
                raise PoolExhaustedError(f"pool {self.prefix} is exhausted ({self.capacity} hosts assigned)")
            address = self.prefix.network_address + self._next_offset
            self._next_offset += 1
            assigned = host_prefix(address)
            self._assignments[customer] = assigned

        logger.debug(f"Assigned {assigned} to {customer}")
        return assigned


def assign_secure_address(pool: AddressPool, customer: Hashable) -> Prefix:
    """Lowest free host of the pool, stable per customer."""
    return pool.assign(customer)
