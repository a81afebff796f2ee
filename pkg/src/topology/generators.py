"""
Synthetic Topology Generation
Preferential-attachment AS graphs oriented into a provider hierarchy
"""

from typing import List

import networkx as nx
import numpy as np
from loguru import logger

from .models import Edge, Relationship, Topology


def generate_topology(n: int, seed: int, attach: int = 2, peer_fraction: float = 0.2) -> Topology:
    """
    Build an ``n``-AS topology with relationship labels.

    Nodes join in order and attach to ``attach`` earlier nodes, so the
    earlier (better connected) endpoint of every link is the provider.
    A ``peer_fraction`` of links between two transit candidates become
    peerings instead. ASNs are 1..n; the provider graph is acyclic.
    """
    if n < 2:
        raise ValueError("a topology needs at least two ASes")
    attach = max(1, min(attach, n - 1))

    graph = nx.barabasi_albert_graph(n, attach, seed=seed)
    rng = np.random.default_rng(seed)
    degree = dict(graph.degree())
    median_degree = float(np.median(list(degree.values())))

    edges: List[Edge] = []
    for u, v in sorted((min(a, b), max(a, b)) for a, b in graph.edges()):
        both_transit = degree[u] > median_degree and degree[v] > median_degree
        if both_transit and rng.random() < peer_fraction:
            edges.append(Edge(u + 1, v + 1, Relationship.P2P))
        else:
            edges.append(Edge(u + 1, v + 1, Relationship.P2C))

    topology = Topology(edges)
    logger.debug(f"Generated {topology!r} (seed={seed})")
    return topology


def random_small_topology(rng: np.random.Generator, n: int, p_link: float = 0.35, p_peer: float = 0.3) -> Topology:
    """
    Dense random hierarchy for property tests: ASN ``i`` may only be a
    provider of ASNs greater than ``i``. Every AS after the first gets at
    least one provider so the graph is connected.
    """
    edges: List[Edge] = []
    for j in range(2, n + 1):
        edges.append(Edge(int(rng.integers(1, j)), j, Relationship.P2C))
        for i in range(1, j):
            if any(e.as1 == i and e.as2 == j for e in edges):
                continue
            if rng.random() < p_link:
                rel = Relationship.P2P if rng.random() < p_peer else Relationship.P2C
                edges.append(Edge(i, j, rel))
    return Topology(edges)
