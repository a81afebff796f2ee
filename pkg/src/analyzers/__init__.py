# Analyzers module
from .latency import BackbonePathSet, LatencyBreakdown, LatencyModel, customer_pair_latency, end_to_end, pop_pair_latency
from .parallel import AttackResult, AttackTask, evaluate_attack, run_attack_tasks
from .placement import (
    PlacementProblem,
    PlacementResult,
    PlacementScore,
    evaluate_placement,
    exhaustive_best,
    greedy_best,
    transit_candidates,
)
from .resilience import (
    Deployment,
    ResilienceReport,
    Scenario,
    SerialHijackerStudy,
    beta_from_alphas,
    gain_percent,
    resilience,
    resilience_cdf,
    run_campaign,
    sample_ases,
    serial_hijacker_study,
)

__all__ = [
    "AttackResult",
    "AttackTask",
    "BackbonePathSet",
    "Deployment",
    "LatencyBreakdown",
    "LatencyModel",
    "PlacementProblem",
    "PlacementResult",
    "PlacementScore",
    "ResilienceReport",
    "Scenario",
    "SerialHijackerStudy",
    "beta_from_alphas",
    "customer_pair_latency",
    "end_to_end",
    "evaluate_attack",
    "evaluate_placement",
    "exhaustive_best",
    "gain_percent",
    "greedy_best",
    "pop_pair_latency",
    "resilience",
    "resilience_cdf",
    "run_attack_tasks",
    "run_campaign",
    "sample_ases",
    "serial_hijacker_study",
    "transit_candidates",
]
