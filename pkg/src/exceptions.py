"""
SBAS Lab Errors
Exception hierarchy shared by the simulator, control plane and CLI
"""

from typing import Optional


class SbasLabError(Exception):
    """Base class for every error raised by this package."""


class TopologyError(SbasLabError):
    """Invalid AS-level topology input."""


class MalformedLineError(TopologyError):
    """A relationship line does not follow the serial-2 format."""

    def __init__(self, line_no: int, line: str, reason: str):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: {reason}: {line!r}")


class ConflictingRelationshipError(TopologyError):
    """The same AS pair was declared with two different relationships."""

    def __init__(self, as1: int, as2: int, existing: str, new: str):
        self.pair = (as1, as2)
        super().__init__(f"AS{as1}-AS{as2} declared as {existing} and {new}")


class UnknownAsError(TopologyError):
    """An AS referenced by a scenario is not part of the topology."""

    def __init__(self, asn: int):
        self.asn = asn
        super().__init__(f"AS{asn} is not in the topology")


class ScenarioError(SbasLabError):
    """A simulation scenario violates its preconditions."""


class EmptyInputError(SbasLabError):
    """An aggregate was requested over an empty collection."""


class ConfigError(SbasLabError):
    """Deployment configuration could not be loaded or is inconsistent."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UnknownPopError(SbasLabError):
    """A PoP id does not belong to the deployment."""

    def __init__(self, pop_id: str):
        self.pop_id = pop_id
        super().__init__(f"unknown PoP {pop_id!r}")


class PoolExhaustedError(SbasLabError):
    """The secure address pool has no free host address left."""


class PlacementBudgetError(SbasLabError):
    """Exhaustive placement would evaluate more subsets than allowed."""


class LatencyError(SbasLabError):
    """Invalid latency model input."""
