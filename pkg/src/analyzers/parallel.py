"""
Attack Task Runner
Evaluates (deployment, attacker, trial) hijack tasks in a process pool
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from src.simulation.hijack import Reachability, simulate_hijack
from src.simulation.tiebreak import TiebreakPolicy
from src.topology.models import Topology


@dataclass(frozen=True)
class AttackTask:
    """One hijack simulation; ``sources`` None means every AS but the attacker."""

    deployment_id: str
    nodes: Tuple[int, ...]
    legit_origin: int
    attacker: int
    rov: bool
    tiebreak: TiebreakPolicy
    trial: int = 0
    sources: Optional[Tuple[int, ...]] = None
    no_route_is_resilient: bool = True


@dataclass(frozen=True)
class AttackResult:
    deployment_id: str
    attacker: int
    trial: int
    resilient: int
    total: int

    @property
    def beta(self) -> float:
        return self.resilient / self.total


def evaluate_attack(topology: Topology, task: AttackTask) -> AttackResult:
    """Count the sources for which the attacker fails to attract traffic."""
    outcome = simulate_hijack(
        topology, task.nodes, task.attacker, task.legit_origin, task.rov, task.tiebreak
    )

    if task.sources is None:
        sources = [asn for asn in topology.nodes if asn != task.attacker]
    else:
        sources = [asn for asn in task.sources if asn != task.attacker]

    resilient = 0
    for source in sources:
        if source == task.legit_origin:
            resilient += 1
            continue
        state = outcome.of(source)
        if state == Reachability.ROUTES_TO_VICTIM:
            resilient += 1
        elif state == Reachability.NO_ROUTE and task.no_route_is_resilient:
            resilient += 1

    logger.debug(
        f"{task.deployment_id}: attacker AS{task.attacker} trial {task.trial} -> "
        f"{resilient}/{len(sources)} resilient"
    )
    return AttackResult(task.deployment_id, task.attacker, task.trial, resilient, len(sources))


# Worker-process state, set once by the pool initializer
_worker_topology: Optional[Topology] = None


def _init_worker(topology: Topology) -> None:
    global _worker_topology
    _worker_topology = topology


def _run_in_worker(task: AttackTask) -> AttackResult:
    return evaluate_attack(_worker_topology, task)


def run_attack_tasks(topology: Topology, tasks: Sequence[AttackTask], jobs: int = 1) -> List[AttackResult]:
    """
    Evaluate tasks, returning results in task order. Every task carries
    its own tiebreak stream, so the pool size never changes the results.
    """
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [evaluate_attack(topology, task) for task in tasks]

    workers = min(jobs, len(tasks))
    chunksize = max(1, len(tasks) // (workers * 4))
    logger.debug(f"Running {len(tasks)} attack tasks on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(topology,)) as pool:
        return list(pool.map(_run_in_worker, tasks, chunksize=chunksize))
