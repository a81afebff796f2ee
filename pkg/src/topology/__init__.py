# Topology module
from .models import (
    Address,
    AsNumber,
    Edge,
    Prefix,
    Relationship,
    Topology,
    augment_edges,
    parse_address,
    parse_asn,
    parse_prefix,
    topology_stats,
)
from .generators import generate_topology, random_small_topology

__all__ = [
    "Address",
    "AsNumber",
    "Edge",
    "Prefix",
    "Relationship",
    "Topology",
    "augment_edges",
    "generate_topology",
    "parse_address",
    "parse_asn",
    "parse_prefix",
    "random_small_topology",
    "topology_stats",
]
