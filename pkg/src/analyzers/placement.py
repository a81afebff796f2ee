"""
Announcement Node Placement
Exhaustive and greedy search for the most hijack-resilient node sets
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.exceptions import EmptyInputError, PlacementBudgetError, ScenarioError, UnknownAsError
from src.simulation.tiebreak import TiebreakPolicy
from src.topology.models import Topology

from .parallel import AttackResult, AttackTask, run_attack_tasks

PLACEMENT_COLUMNS = ["subset", "beta_mean", "beta_median"]

# Scores closer than this are treated as ties.
_TIE_DIGITS = 12

_CacheKey = Tuple[FrozenSet[int], int, int]


@dataclass(frozen=True)
class PlacementScore:
    nodes: Tuple[int, ...]
    mean: float
    median: float

    @property
    def label(self) -> str:
        return " ".join(str(asn) for asn in self.nodes)

    def sort_key(self) -> float:
        return round(self.mean, _TIE_DIGITS)


@dataclass(frozen=True)
class GreedyStep:
    added: int
    nodes: Tuple[int, ...]
    beta: float


@dataclass(frozen=True)
class PlacementResult:
    nodes: Tuple[int, ...]
    beta: float
    trace: Tuple[GreedyStep, ...] = ()


@dataclass
class PlacementProblem:
    """
    Choose ``k`` announcement nodes out of ``candidates``.

    Every node set is scored against the same attacker sample; outcomes
    are cached per (node set, attacker, trial) so overlapping searches
    never re-propagate.
    """

    topology: Topology
    candidates: Tuple[int, ...]
    k: int
    attackers: Tuple[int, ...]
    legit_origin: int
    tiebreak: TiebreakPolicy
    rov: bool = False
    sources: Optional[Tuple[int, ...]] = None
    trials: int = 1
    no_route_is_resilient: bool = True
    jobs: int = 1
    budget: int = 20000
    _scores: Dict[FrozenSet[int], PlacementScore] = field(default_factory=dict, repr=False)
    _cache: Dict[_CacheKey, AttackResult] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.candidates = tuple(sorted(set(self.candidates)))
        self.attackers = tuple(self.attackers)
        if not self.candidates:
            raise EmptyInputError("placement needs at least one candidate")
        if not 1 <= self.k <= len(self.candidates):
            raise ScenarioError(f"k must be between 1 and {len(self.candidates)}, got {self.k}")
        if not self.attackers:
            raise EmptyInputError("placement needs an attacker sample")
        if self.trials < 1:
            raise ScenarioError("trials must be at least 1")
        for asn in self.candidates + self.attackers:
            if asn not in self.topology:
                raise UnknownAsError(asn)
        overlap = set(self.candidates) & set(self.attackers)
        if overlap:
            raise ScenarioError(f"attackers {sorted(overlap)} are also placement candidates")

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------

    def _tasks_for(self, nodes: FrozenSet[int]) -> List[AttackTask]:
        ordered = tuple(sorted(nodes))
        tasks = []
        for trial in range(self.trials):
            for index, attacker in enumerate(self.attackers):
                if (nodes, attacker, trial) in self._cache:
                    continue
                tasks.append(AttackTask(
                    deployment_id=self._label(ordered),
                    nodes=ordered,
                    legit_origin=self.legit_origin,
                    attacker=attacker,
                    rov=self.rov,
                    tiebreak=self.tiebreak.for_scenario(index, trial),
                    trial=trial,
                    sources=self.sources,
                    no_route_is_resilient=self.no_route_is_resilient,
                ))
        return tasks

    @staticmethod
    def _label(nodes: Tuple[int, ...]) -> str:
        return " ".join(str(asn) for asn in nodes)

    def _check_nodes(self, nodes: Iterable[int]) -> FrozenSet[int]:
        node_set = frozenset(nodes)
        if not node_set:
            raise EmptyInputError("cannot evaluate an empty node set")
        outside = node_set - set(self.candidates)
        if outside:
            raise ScenarioError(f"nodes {sorted(outside)} are not placement candidates")
        return node_set

    def _fill_cache(self, node_sets: Sequence[FrozenSet[int]]) -> None:
        tasks: List[AttackTask] = []
        keys: List[FrozenSet[int]] = []
        for nodes in node_sets:
            pending = self._tasks_for(nodes)
            tasks.extend(pending)
            keys.extend([nodes] * len(pending))
        if not tasks:
            return
        for nodes, result in zip(keys, run_attack_tasks(self.topology, tasks, self.jobs)):
            self._cache[(nodes, result.attacker, result.trial)] = result

    def _score(self, nodes: FrozenSet[int]) -> PlacementScore:
        if nodes in self._scores:
            return self._scores[nodes]
        betas = []
        for attacker in self.attackers:
            total = sum(self._cache[(nodes, attacker, trial)].beta for trial in range(self.trials))
            betas.append(total / self.trials)
        score = PlacementScore(tuple(sorted(nodes)), float(np.mean(betas)), float(np.median(betas)))
        self._scores[nodes] = score
        return score

    @property
    def evaluations(self) -> List[PlacementScore]:
        """Every distinct node set scored so far, in evaluation order."""
        return list(self._scores.values())

    def evaluate_many(self, node_sets: Sequence[Iterable[int]]) -> List[PlacementScore]:
        checked = [self._check_nodes(nodes) for nodes in node_sets]
        self._fill_cache(checked)
        return [self._score(nodes) for nodes in checked]

    def evaluations_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"subset": s.label, "beta_mean": s.mean, "beta_median": s.median} for s in self.evaluations],
            columns=PLACEMENT_COLUMNS,
        )


def evaluate_placement(problem: PlacementProblem, nodes: Iterable[int]) -> PlacementScore:
    """Mean and median resilience of one node set over the attacker sample."""
    return problem.evaluate_many([nodes])[0]


def exhaustive_best(problem: PlacementProblem) -> PlacementResult:
    """Best k-subset by mean resilience; ties go to the lexicographically smallest set."""
    subsets = math.comb(len(problem.candidates), problem.k)
    if subsets > problem.budget:
        raise PlacementBudgetError(
            f"{subsets} subsets of size {problem.k} exceed the budget of {problem.budget}"
        )
    logger.info(f"Exhaustive placement: {subsets} subsets of {len(problem.candidates)} candidates")

    combos = [frozenset(c) for c in itertools.combinations(problem.candidates, problem.k)]
    scores = problem.evaluate_many(combos)

    # combinations() yields subsets in lexicographic order, so the first maximum wins ties
    best = scores[0]
    for score in scores[1:]:
        if score.sort_key() > best.sort_key():
            best = score
    logger.info(f"Exhaustive best: {{{best.label}}} mean beta {best.mean:.4f}")
    return PlacementResult(best.nodes, best.mean)


def greedy_best(problem: PlacementProblem) -> PlacementResult:
    """Add the candidate that maximizes mean resilience, one node at a time."""
    chosen: Tuple[int, ...] = ()
    trace: List[GreedyStep] = []
    best: Optional[PlacementScore] = None

    for step in range(problem.k):
        remaining = [c for c in problem.candidates if c not in chosen]
        scores = problem.evaluate_many([frozenset(chosen + (c,)) for c in remaining])
        # remaining is ascending, so the first maximum is the lowest ASN
        pick, best = remaining[0], scores[0]
        for candidate, score in zip(remaining[1:], scores[1:]):
            if score.sort_key() > best.sort_key():
                pick, best = candidate, score
        chosen = tuple(sorted(chosen + (pick,)))
        trace.append(GreedyStep(pick, chosen, best.mean))
        logger.debug(f"Greedy step {step + 1}: +AS{pick} -> mean beta {best.mean:.4f}")

    logger.info(f"Greedy best: {{{best.label}}} mean beta {best.mean:.4f}")
    return PlacementResult(chosen, best.mean, tuple(trace))


def transit_candidates(topology: Topology, candidates: Iterable[int]) -> Tuple[int, ...]:
    """Keep candidates that carry transit (have at least one customer)."""
    return tuple(sorted(asn for asn in candidates if asn in topology and topology.is_transit(asn)))
