"""
AS-level Topology Model
Immutable Internet graph with provider/customer and peer relationships
"""

import ipaddress
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, FrozenSet, Iterable, List, NewType, Optional, Tuple, Union

import networkx as nx

from src.exceptions import ConflictingRelationshipError, TopologyError

AsNumber = NewType("AsNumber", int)
Prefix = Union[ipaddress.IPv4Network, ipaddress.IPv6Network]
Address = Union[ipaddress.IPv4Address, ipaddress.IPv6Address]

EDGE_REL = "rel"


def parse_asn(value: Union[int, str]) -> AsNumber:
    """Parse a positive AS number, accepting an optional ``AS`` prefix."""
    text = str(value).strip()
    if text.upper().startswith("AS"):
        text = text[2:]
    try:
        asn = int(text)
    except ValueError:
        raise ValueError(f"not an AS number: {value!r}") from None
    if asn <= 0:
        raise ValueError(f"AS number must be positive: {value!r}")
    return AsNumber(asn)


def parse_prefix(value: Union[str, Prefix]) -> Prefix:
    """Parse a prefix; host bits beyond the prefix length must be zero."""
    if isinstance(value, (ipaddress.IPv4Network, ipaddress.IPv6Network)):
        return value
    return ipaddress.ip_network(str(value).strip(), strict=True)


def parse_address(value: Union[str, Address]) -> Address:
    if isinstance(value, (ipaddress.IPv4Address, ipaddress.IPv6Address)):
        return value
    return ipaddress.ip_address(str(value).strip())


class Relationship(IntEnum):
    """Business relationship seen from the first AS of a pair (serial-2 codes)."""

    P2C = -1
    P2P = 0
    C2P = 1

    @property
    def label(self) -> str:
        return {Relationship.P2C: "provider", Relationship.P2P: "peer", Relationship.C2P: "customer"}[self]


@dataclass(frozen=True, order=True)
class Edge:
    """One declared relationship; ``rel`` is P2C (as1 provides as2) or P2P."""

    as1: int
    as2: int
    rel: Relationship

    def canonical(self) -> "Edge":
        if self.rel == Relationship.C2P:
            return Edge(self.as2, self.as1, Relationship.P2C)
        if self.rel == Relationship.P2P and self.as1 > self.as2:
            return Edge(self.as2, self.as1, Relationship.P2P)
        return self


class Topology:
    """
    AS graph built once from an edge list and never mutated afterwards.

    Internally a frozen networkx DiGraph holds both directions of every
    link, tagged with the relationship seen from the edge's source.
    Sorted adjacency tuples are cached for the propagation hot loop.
    """

    def __init__(self, edges: Iterable[Edge]):
        graph = nx.DiGraph()
        for edge in edges:
            self._add_edge(graph, edge.canonical())

        self._graph = nx.freeze(graph)
        self._nodes: FrozenSet[int] = frozenset(graph.nodes)
        self._providers: Dict[int, Tuple[int, ...]] = {}
        self._customers: Dict[int, Tuple[int, ...]] = {}
        self._peers: Dict[int, Tuple[int, ...]] = {}

        for asn in self._nodes:
            by_rel: Dict[Relationship, List[int]] = {rel: [] for rel in Relationship}
            for neighbor, data in graph[asn].items():
                by_rel[data[EDGE_REL]].append(neighbor)
            self._customers[asn] = tuple(sorted(by_rel[Relationship.P2C]))
            self._peers[asn] = tuple(sorted(by_rel[Relationship.P2P]))
            self._providers[asn] = tuple(sorted(by_rel[Relationship.C2P]))

    @staticmethod
    def _add_edge(graph: nx.DiGraph, edge: Edge) -> None:
        if edge.as1 <= 0 or edge.as2 <= 0:
            raise TopologyError(f"AS numbers must be positive: {edge.as1}|{edge.as2}")
        if edge.as1 == edge.as2:
            raise TopologyError(f"self-loop on AS{edge.as1}")

        if graph.has_edge(edge.as1, edge.as2):
            existing = Relationship(graph[edge.as1][edge.as2][EDGE_REL])
            if existing == edge.rel:
                return  # identical duplicate
            raise ConflictingRelationshipError(edge.as1, edge.as2, existing.label, edge.rel.label)

        graph.add_edge(edge.as1, edge.as2, **{EDGE_REL: edge.rel})
        graph.add_edge(edge.as2, edge.as1, **{EDGE_REL: Relationship(-edge.rel)})

    @classmethod
    def from_pairs(cls, p2c: Iterable[Tuple[int, int]] = (), p2p: Iterable[Tuple[int, int]] = ()) -> "Topology":
        """Build from (provider, customer) and (peer, peer) tuples."""
        edges = [Edge(a, b, Relationship.P2C) for a, b in p2c]
        edges += [Edge(a, b, Relationship.P2P) for a, b in p2p]
        return cls(edges)

    # =========================================================================
    # Queries
    # =========================================================================

    @property
    def nodes(self) -> FrozenSet[int]:
        return self._nodes

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def graph(self) -> nx.DiGraph:
        """Frozen networkx view (both directions, ``rel`` edge attribute)."""
        return self._graph

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, asn: object) -> bool:
        return asn in self._nodes

    def providers(self, asn: int) -> Tuple[int, ...]:
        return self._providers.get(asn, ())

    def customers(self, asn: int) -> Tuple[int, ...]:
        return self._customers.get(asn, ())

    def peers(self, asn: int) -> Tuple[int, ...]:
        return self._peers.get(asn, ())

    def neighbors(self, asn: int) -> Tuple[int, ...]:
        return tuple(sorted(self.providers(asn) + self.customers(asn) + self.peers(asn)))

    def relationship(self, as1: int, as2: int) -> Optional[Relationship]:
        """Relationship of ``as1`` towards ``as2``, or None if not adjacent."""
        if not self._graph.has_edge(as1, as2):
            return None
        return Relationship(self._graph[as1][as2][EDGE_REL])

    def edges(self) -> List[Edge]:
        """Canonical sorted edge list: P2C as (provider, customer), P2P low ASN first."""
        result = []
        for as1, as2, rel in self._graph.edges(data=EDGE_REL):
            if rel == Relationship.P2C or (rel == Relationship.P2P and as1 < as2):
                result.append(Edge(as1, as2, Relationship(rel)))
        return sorted(result)

    @property
    def p2c_count(self) -> int:
        return sum(len(c) for c in self._customers.values())

    @property
    def p2p_count(self) -> int:
        return sum(len(p) for p in self._peers.values()) // 2

    def customer_cone(self, asn: int) -> FrozenSet[int]:
        """ASes reachable by walking provider-to-customer links, including ``asn``."""
        if asn not in self._nodes:
            return frozenset()
        p2c_view = nx.subgraph_view(
            self._graph,
            filter_edge=lambda u, v: self._graph[u][v][EDGE_REL] == Relationship.P2C,
        )
        return frozenset(nx.descendants(p2c_view, asn)) | {asn}

    def is_transit(self, asn: int) -> bool:
        return bool(self.customers(asn))

    def __repr__(self) -> str:
        return f"Topology(n={self.n}, p2c={self.p2c_count}, p2p={self.p2p_count})"


def augment_edges(topology: Topology, extra: Iterable[Edge]) -> Topology:
    """
    Union of ``topology`` with extra edges (e.g. inferred peerings).
    Identical duplicates are ignored; a conflicting relationship raises.
    """
    extra = list(extra)
    if not extra:
        return topology
    return Topology(topology.edges() + extra)


def topology_stats(topology: Topology) -> Dict[str, int]:
    """Summary counts for `topo stats`."""
    stubs = sum(1 for asn in topology.nodes if not topology.customers(asn))
    cones = [len(topology.customer_cone(asn)) for asn in topology.nodes if topology.customers(asn)]
    return {
        "nodes": topology.n,
        "p2c_edges": topology.p2c_count,
        "p2p_edges": topology.p2p_count,
        "stub_ases": stubs,
        "transit_ases": topology.n - stubs,
        "max_customer_cone": max(cones) if cones else 0,
    }
