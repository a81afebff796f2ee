"""Shared fixtures and builders."""

from pathlib import Path

import pytest

from src.sbas.control import CustomerConfig, PopConfig, RoaRecord, SbasControlPlane
from src.simulation.tiebreak import LowestNextHopAsn
from src.topology.models import Topology, parse_prefix

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "sample"


@pytest.fixture
def sample_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def deterministic():
    return LowestNextHopAsn()


@pytest.fixture
def four_as_topology() -> Topology:
    """S provides X, V provides S, T provides V (ASNs S=1, X=2, V=3, T=4)."""
    return Topology.from_pairs(p2c=[(1, 2), (3, 1), (4, 3)])


def make_pops(n: int = 3, sbas_asn: int = 64500, peers=(174,)):
    return [
        PopConfig(
            id=f"P{i}",
            sbas_asn=sbas_asn,
            internal_prefix=parse_prefix(f"10.255.0.{4 * (i - 1)}/30"),
            internet_peers=frozenset(peers),
            locator=f"loc-{i}",
        )
        for i in range(1, n + 1)
    ]


@pytest.fixture
def control_plane() -> SbasControlPlane:
    """Three PoPs; 65001 at P1 (backup P2), SBAS-only 65002 at P2, pool 2.0.0.0/24."""
    customers = [
        CustomerConfig(65001, (parse_prefix("1.0.0.0/24"),), "P1", ("P2",),
                       vpn_endpoint=parse_prefix("198.51.100.1/32").network_address),
        CustomerConfig(65002, (parse_prefix("3.0.0.0/24"),), "P2", (), frozenset({"sbas-only"})),
    ]
    roas = [
        RoaRecord(parse_prefix("1.0.0.0/24"), 65001, 24),
        RoaRecord(parse_prefix("3.0.0.0/24"), 65002, 24),
    ]
    return SbasControlPlane(64500, make_pops(), customers, roas, pool=parse_prefix("2.0.0.0/24"))
