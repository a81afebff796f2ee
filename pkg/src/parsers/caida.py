"""
CAIDA Relationship Parser
Reads and writes the serial-2 ``as1|as2|rel[|source]`` format
"""

import bz2
import gzip
import sys
from pathlib import Path
from typing import IO, Iterable, List, Union

from loguru import logger

from src.exceptions import MalformedLineError
from src.topology.models import Edge, Relationship, Topology

_VALID_RELS = {Relationship.P2C.value, Relationship.P2P.value}


def parse_edges(lines: Iterable[str]) -> List[Edge]:
    """Parse relationship lines into edges; ``#`` lines and blanks are skipped."""
    edges: List[Edge] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        fields = line.split("|")
        if len(fields) not in (3, 4):
            raise MalformedLineError(line_no, line, f"expected 3 or 4 fields, got {len(fields)}")

        try:
            as1, as2, rel = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError:
            raise MalformedLineError(line_no, line, "non-integer field") from None

        if as1 <= 0 or as2 <= 0:
            raise MalformedLineError(line_no, line, "AS numbers must be positive")
        if rel not in _VALID_RELS:
            raise MalformedLineError(line_no, line, f"relationship {rel} not in {{-1, 0}}")

        # the optional source field carries provenance only
        edges.append(Edge(as1, as2, Relationship(rel)))
    return edges


def parse_relationships(lines: Union[str, Iterable[str]]) -> Topology:
    """Build a Topology from serial-2 text (a string or an iterable of lines)."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    return Topology(parse_edges(lines))


def _open_text(path: Path) -> IO[str]:
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    if path.suffix == ".bz2":
        return bz2.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def read_relationships(path: Union[str, Path]) -> Topology:
    """Load a relationship file (plain, .gz or .bz2); ``-`` reads standard input."""
    if str(path) == "-":
        topology = parse_relationships(sys.stdin)
    else:
        path = Path(path)
        with _open_text(path) as handle:
            topology = parse_relationships(handle)
    logger.info(f"Loaded topology from {path}: {topology.n} ASes, "
                f"{topology.p2c_count} p2c, {topology.p2p_count} p2p")
    return topology


def serialize(topology: Topology) -> str:
    """Canonical serial-2 text: sorted edges, P2C as provider first."""
    return "".join(f"{e.as1}|{e.as2}|{int(e.rel)}\n" for e in topology.edges())


def write_relationships(topology: Topology, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize(topology), encoding="utf-8")
