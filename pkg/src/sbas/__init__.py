# SBAS module
from .addressing import (
    AddressCategory,
    AddressPlan,
    AddressPool,
    assign_secure_address,
    check_secure_prefix,
    classify_address,
)
from .control import (
    CustomerAnnouncement,
    CustomerConfig,
    EgressTargets,
    ExternalAnnouncement,
    IbgpUpdate,
    PopAuthorization,
    PopConfig,
    RejectReason,
    RoaIndex,
    RoaRecord,
    SbasCommunity,
    SbasControlPlane,
    ValidationResult,
    check_pop_authorization,
    egress_targets,
    make_egress_announcement,
    redistribute,
    validate_ingress,
)
from .pop_engine import (
    Action,
    CustomerVpn,
    EgressCandidate,
    ExternalRoute,
    ForwardDecision,
    InternalMap,
    InternetNeighbor,
    InternetRoute,
    PopEngine,
    PopState,
    PriorityTables,
    RemotePop,
    RouterPeer,
    RoutingTable,
    Tier,
    build_pop_state,
    build_tables,
    dump_tables,
    forward,
    lookup,
    select_egress,
)

__all__ = [
    "Action",
    "AddressCategory",
    "AddressPlan",
    "AddressPool",
    "CustomerAnnouncement",
    "CustomerConfig",
    "CustomerVpn",
    "EgressCandidate",
    "EgressTargets",
    "ExternalAnnouncement",
    "ExternalRoute",
    "ForwardDecision",
    "IbgpUpdate",
    "InternalMap",
    "InternetNeighbor",
    "InternetRoute",
    "PopAuthorization",
    "PopConfig",
    "PopEngine",
    "PopState",
    "PriorityTables",
    "RejectReason",
    "RemotePop",
    "RoaIndex",
    "RoaRecord",
    "RouterPeer",
    "RoutingTable",
    "SbasCommunity",
    "SbasControlPlane",
    "Tier",
    "ValidationResult",
    "assign_secure_address",
    "check_secure_prefix",
    "build_pop_state",
    "build_tables",
    "check_pop_authorization",
    "classify_address",
    "dump_tables",
    "egress_targets",
    "forward",
    "lookup",
    "make_egress_announcement",
    "redistribute",
    "select_egress",
    "validate_ingress",
]
