# Parsers module
from .caida import parse_edges, parse_relationships, read_relationships, serialize, write_relationships
from .deployment import DeploymentConfig, load_control_plane, load_deployment, read_roa_csv

__all__ = [
    "DeploymentConfig",
    "load_control_plane",
    "load_deployment",
    "parse_edges",
    "parse_relationships",
    "read_relationships",
    "read_roa_csv",
    "serialize",
    "write_relationships",
]
