"""
Hijack Resilience Analysis
Resilience metric, attack campaigns, CDFs and the serial-hijacker study
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.exceptions import EmptyInputError, ScenarioError, UnknownAsError
from src.simulation.tiebreak import TiebreakPolicy
from src.topology.models import Topology

from .parallel import AttackResult, AttackTask, run_attack_tasks

RESILIENCE_COLUMNS = ["victim_id", "nodes", "attacker", "rov", "beta"]
CDF_COLUMNS = ["resilience", "cdf"]


@dataclass(frozen=True)
class Deployment:
    """Where a victim prefix is announced: one or more nodes, one legitimate origin."""

    id: str
    nodes: Tuple[int, ...]
    legit_origin: int

    def __post_init__(self):
        if not self.nodes:
            raise ScenarioError(f"deployment {self.id!r} has no announcement nodes")
        object.__setattr__(self, "nodes", tuple(sorted(set(self.nodes))))

    @property
    def nodes_label(self) -> str:
        return " ".join(str(asn) for asn in self.nodes)


@dataclass(frozen=True)
class Scenario:
    deployment: Deployment
    attackers: Tuple[int, ...]
    rov: bool
    tiebreak: TiebreakPolicy
    trials: int = 1
    sources: Optional[Tuple[int, ...]] = None
    no_route_is_resilient: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ScenarioError("trials must be at least 1")
        if not self.attackers:
            raise EmptyInputError("resilience is undefined without attackers")
        overlap = set(self.attackers) & set(self.deployment.nodes)
        if overlap:
            raise ScenarioError(f"attackers {sorted(overlap)} are announcement nodes of {self.deployment.id!r}")


def _check_scenario(topology: Topology, scenario: Scenario) -> None:
    for asn in scenario.deployment.nodes + scenario.attackers:
        if asn not in topology:
            raise UnknownAsError(asn)
    if scenario.sources is not None:
        for asn in scenario.sources:
            if asn not in topology and asn != scenario.deployment.legit_origin:
                raise UnknownAsError(asn)
        for attacker in scenario.attackers:
            if not [s for s in scenario.sources if s != attacker]:
                raise EmptyInputError(f"no traffic sources left besides attacker AS{attacker}")
    elif topology.n < 2:
        raise EmptyInputError("topology has no traffic sources besides the attacker")


def _tasks(scenario: Scenario, deployment: Optional[Deployment] = None) -> List[AttackTask]:
    deployment = deployment or scenario.deployment
    tasks = []
    for trial in range(scenario.trials):
        for index, attacker in enumerate(scenario.attackers):
            tasks.append(AttackTask(
                deployment_id=deployment.id,
                nodes=deployment.nodes,
                legit_origin=deployment.legit_origin,
                attacker=attacker,
                rov=scenario.rov,
                tiebreak=scenario.tiebreak.for_scenario(index, trial),
                trial=trial,
                sources=scenario.sources,
                no_route_is_resilient=scenario.no_route_is_resilient,
            ))
    return tasks


def _per_attacker_beta(results: Iterable[AttackResult], attackers: Sequence[int], trials: int) -> Dict[int, float]:
    sums: Dict[int, float] = defaultdict(float)
    for result in results:
        sums[result.attacker] += result.beta
    return {attacker: sums[attacker] / trials for attacker in attackers}


def resilience(topology: Topology, scenario: Scenario, jobs: int = 1) -> float:
    """
    Fraction of (attacker, source) pairs where the attacker fails to
    attract the source's traffic, pooled over attackers and trials. Each
    attacker is left out of its own source set.
    """
    _check_scenario(topology, scenario)
    results = run_attack_tasks(topology, _tasks(scenario), jobs)
    return sum(r.resilient for r in results) / sum(r.total for r in results)


def beta_from_alphas(alphas: Sequence[Sequence[int]]) -> float:
    """Aggregate an attackers x sources matrix of 0/1 outcomes."""
    matrix = np.asarray(alphas, dtype=float)
    if matrix.size == 0:
        raise EmptyInputError("empty attacker/source matrix")
    return float(matrix.mean())


def resilience_cdf(values: Sequence[float]) -> List[Tuple[float, float]]:
    """Empirical CDF: (distinct resilience value, fraction of values <= it)."""
    if len(values) == 0:
        raise EmptyInputError("cannot build a CDF from no values")
    data = np.asarray(values, dtype=float)
    if np.any((data < 0.0) | (data > 1.0)):
        raise ValueError("resilience values must lie in [0, 1]")
    distinct, counts = np.unique(data, return_counts=True)
    cumulative = np.cumsum(counts) / len(data)
    cumulative[-1] = 1.0
    return [(float(v), float(c)) for v, c in zip(distinct, cumulative)]


def cdf_frame(values: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame(resilience_cdf(values), columns=CDF_COLUMNS)


# =============================================================================
# Campaigns
# =============================================================================

@dataclass
class DeploymentSummary:
    deployment: Deployment
    betas: Dict[int, float]

    @property
    def median(self) -> float:
        return float(np.median(list(self.betas.values())))

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.betas.values())))


@dataclass
class ResilienceReport:
    """Per-deployment, per-attacker resilience with summary statistics."""

    rov: bool
    summaries: Dict[str, DeploymentSummary] = field(default_factory=dict)
    baseline_id: Optional[str] = None

    def improvement(self, deployment_id: str) -> Optional[float]:
        """Median improvement over the baseline, in percent."""
        if self.baseline_id is None:
            return None
        base = self.summaries[self.baseline_id].median
        return gain_percent(base, self.summaries[deployment_id].median)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for summary in self.summaries.values():
            for attacker, beta in summary.betas.items():
                rows.append({
                    "victim_id": summary.deployment.id,
                    "nodes": summary.deployment.nodes_label,
                    "attacker": attacker,
                    "rov": int(self.rov),
                    "beta": beta,
                })
        return pd.DataFrame(rows, columns=RESILIENCE_COLUMNS)

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for deployment_id, summary in self.summaries.items():
            improvement = self.improvement(deployment_id)
            rows.append({
                "victim_id": deployment_id,
                "nodes": summary.deployment.nodes_label,
                "attackers": len(summary.betas),
                "median": summary.median,
                "mean": summary.mean,
                "improvement_pct": improvement if improvement is not None else "",
            })
        return pd.DataFrame(rows)


def run_campaign(
    topology: Topology,
    deployments: Sequence[Deployment],
    attackers: Sequence[int],
    rov: bool,
    tiebreak: TiebreakPolicy,
    trials: int = 1,
    sources: Optional[Sequence[int]] = None,
    baseline_id: Optional[str] = None,
    no_route_is_resilient: bool = True,
    jobs: int = 1,
) -> ResilienceReport:
    """
    Evaluate every deployment against the same attacker sample. Attackers
    that announce for a deployment are skipped for that deployment.
    """
    if not deployments:
        raise EmptyInputError("no deployments to evaluate")
    if baseline_id is not None and baseline_id not in {d.id for d in deployments}:
        raise ScenarioError(f"baseline {baseline_id!r} is not among the deployments")

    report = ResilienceReport(rov=rov, baseline_id=baseline_id)
    scenarios: List[Scenario] = []
    tasks: List[AttackTask] = []
    for deployment in deployments:
        usable = tuple(a for a in attackers if a not in deployment.nodes)
        if len(usable) < len(attackers):
            logger.warning(f"{deployment.id}: skipping {len(attackers) - len(usable)} attackers that announce the prefix")
        scenario = Scenario(
            deployment=deployment,
            attackers=usable,
            rov=rov,
            tiebreak=tiebreak,
            trials=trials,
            sources=tuple(sources) if sources is not None else None,
            no_route_is_resilient=no_route_is_resilient,
        )
        _check_scenario(topology, scenario)
        scenarios.append(scenario)
        tasks.extend(_tasks(scenario))

    logger.info(f"Campaign: {len(deployments)} deployments x {len(attackers)} attackers x {trials} trials (rov={rov})")
    results = run_attack_tasks(topology, tasks, jobs)

    by_deployment: Dict[str, List[AttackResult]] = defaultdict(list)
    for result in results:
        by_deployment[result.deployment_id].append(result)

    for scenario in scenarios:
        deployment = scenario.deployment
        betas = _per_attacker_beta(by_deployment[deployment.id], scenario.attackers, trials)
        report.summaries[deployment.id] = DeploymentSummary(deployment, betas)
        logger.info(f"  {deployment.id}: median beta {report.summaries[deployment.id].median:.3f}")
    return report


def sample_ases(topology: Topology, k: int, seed: int, exclude: Iterable[int] = ()) -> Tuple[int, ...]:
    """Uniform sample of ``k`` ASes without replacement, sorted by ASN."""
    excluded = set(exclude)
    pool = sorted(asn for asn in topology.nodes if asn not in excluded)
    if not pool:
        raise EmptyInputError("no ASes left to sample from")
    if k >= len(pool):
        if k > len(pool):
            logger.warning(f"Requested {k} ASes but only {len(pool)} are eligible; using all")
        return tuple(pool)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pool), size=k, replace=False)
    return tuple(sorted(pool[i] for i in chosen))


# =============================================================================
# Serial hijacker study
# =============================================================================

def gain_percent(base: float, improved: float) -> Optional[float]:
    """Relative gain in percent; undefined when the base is zero."""
    if base == 0:
        return None
    return 100.0 * (improved - base) / base


@dataclass(frozen=True)
class SerialHijackerRow:
    attacker: int
    beta_base: float
    beta_sbas: float

    @property
    def gain(self) -> Optional[float]:
        return gain_percent(self.beta_base, self.beta_sbas)


@dataclass
class SerialHijackerStudy:
    rows: List[SerialHijackerRow]

    def _gains(self) -> List[float]:
        return [row.gain for row in self.rows if row.gain is not None]

    @property
    def median_gain(self) -> Optional[float]:
        gains = self._gains()
        return float(np.median(gains)) if gains else None

    @property
    def mean_gain(self) -> Optional[float]:
        gains = self._gains()
        return float(np.mean(gains)) if gains else None

    @property
    def strongest_gain(self) -> Optional[SerialHijackerRow]:
        rows = [row for row in self.rows if row.gain is not None]
        return max(rows, key=lambda row: (row.gain, -row.attacker)) if rows else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "attacker": row.attacker,
                    "beta_base": row.beta_base,
                    "beta_sbas": row.beta_sbas,
                    "gain_pct": row.gain if row.gain is not None else "",
                }
                for row in self.rows
            ],
            columns=["attacker", "beta_base", "beta_sbas", "gain_pct"],
        )


def serial_hijacker_study(
    topology: Topology,
    attackers: Sequence[int],
    baseline: Deployment,
    sbas: Deployment,
    rov: bool,
    tiebreak: TiebreakPolicy,
    sources: Optional[Sequence[int]] = None,
    trials: int = 1,
    no_route_is_resilient: bool = True,
    jobs: int = 1,
) -> SerialHijackerStudy:
    """Per-attacker resilience with and without SBAS for known hijackers."""
    if not attackers:
        raise EmptyInputError("serial hijacker study needs at least one attacker")
    if baseline.legit_origin != sbas.legit_origin:
        raise ScenarioError("baseline and SBAS deployments must share the legitimate origin")

    report = run_campaign(
        topology, [baseline, sbas], attackers, rov, tiebreak,
        trials=trials, sources=sources, baseline_id=baseline.id,
        no_route_is_resilient=no_route_is_resilient, jobs=jobs,
    )
    base_betas = report.summaries[baseline.id].betas
    sbas_betas = report.summaries[sbas.id].betas
    rows = [
        SerialHijackerRow(attacker, base_betas[attacker], sbas_betas[attacker])
        for attacker in attackers
        if attacker in base_betas and attacker in sbas_betas
    ]
    study = SerialHijackerStudy(rows)
    if study.median_gain is not None:
        logger.info(f"Serial hijackers: median gain {study.median_gain:.1f}%, mean gain {study.mean_gain:.1f}%")
    return study
