"""
Latency Model
Analytic end-to-end latency through two SBAS PoPs
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Tuple

from src.exceptions import LatencyError

# Mean per-PoP processing overhead in milliseconds.
DEFAULT_DELAY_POP_MS = 0.83


@dataclass(frozen=True)
class LatencyBreakdown:
    l_s_to_i: float
    l_e_to_d: float
    delay_pop: float
    l_i_to_e: float

    def __post_init__(self):
        for name in ("l_s_to_i", "l_e_to_d", "delay_pop", "l_i_to_e"):
            if getattr(self, name) < 0:
                raise LatencyError(f"{name} must be nonnegative, got {getattr(self, name)}")


def end_to_end(breakdown: LatencyBreakdown) -> float:
    """Source to ingress, egress to destination, two PoP traversals and the backbone leg."""
    return breakdown.l_s_to_i + breakdown.l_e_to_d + 2 * breakdown.delay_pop + breakdown.l_i_to_e


@dataclass(frozen=True)
class BackbonePathSet:
    """Candidate backbone path latencies between two PoPs."""

    paths_ms: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "paths_ms", tuple(float(p) for p in self.paths_ms))
        if any(p < 0 for p in self.paths_ms):
            raise LatencyError("path latencies must be nonnegative")


def pop_pair_latency(paths: BackbonePathSet) -> float:
    if not paths.paths_ms:
        raise LatencyError("no backbone paths between the PoP pair")
    return min(paths.paths_ms)


class LatencyModel:
    """Configured PoP-pair paths and per-customer ingress latencies."""

    def __init__(
        self,
        pop_paths: Mapping[Tuple[str, str], Iterable[float]],
        ingress_ms: Mapping[int, float],
        delay_pop_ms: float = DEFAULT_DELAY_POP_MS,
    ):
        self._paths: Dict[frozenset, BackbonePathSet] = {}
        for (a, b), paths in pop_paths.items():
            self._paths[frozenset((a, b))] = BackbonePathSet(tuple(paths))
        self.ingress_ms = dict(ingress_ms)
        self.delay_pop_ms = delay_pop_ms

    def backbone(self, pop_a: str, pop_b: str) -> float:
        if pop_a == pop_b:
            return 0.0
        paths = self._paths.get(frozenset((pop_a, pop_b)))
        if paths is None:
            raise LatencyError(f"no backbone paths configured between {pop_a} and {pop_b}")
        return pop_pair_latency(paths)

    def ingress(self, customer: int) -> float:
        try:
            return self.ingress_ms[customer]
        except KeyError:
            raise LatencyError(f"no ingress latency configured for AS{customer}") from None


def customer_pair_latency(
    model: LatencyModel, src_customer: int, src_pop: str, dst_customer: int, dst_pop: str
) -> float:
    """End-to-end latency between two customers attached at the given PoPs."""
    breakdown = LatencyBreakdown(
        l_s_to_i=model.ingress(src_customer),
        l_e_to_d=model.ingress(dst_customer),
        delay_pop=model.delay_pop_ms,
        l_i_to_e=model.backbone(src_pop, dst_pop),
    )
    return end_to_end(breakdown)
