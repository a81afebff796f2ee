"""
SBAS Lab - Command Line
Batch front end: load topologies and deployments, run scenarios, emit CSV
"""

import argparse
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from loguru import logger

from src.analyzers.latency import LatencyBreakdown, customer_pair_latency, end_to_end
from src.analyzers.placement import PlacementProblem, exhaustive_best, greedy_best, transit_candidates
from src.analyzers.resilience import (
    cdf_frame,
    run_campaign,
    sample_ases,
    serial_hijacker_study,
)
from src.config import get_settings
from src.exceptions import ConfigError, SbasLabError
from src.parsers.caida import read_relationships, serialize, write_relationships
from src.parsers.deployment import load_deployment, read_roa_csv
from src.reports import hijack_frame, read_beta_csv, write_csv
from src.sbas.addressing import AddressCategory
from src.sbas.pop_engine import Action, CustomerVpn, build_pop_state, dump_tables, forward
from src.simulation.hijack import simulate_hijack
from src.simulation.tiebreak import derive_seed, tiebreak_from_name
from src.topology.generators import generate_topology
from src.topology.models import topology_stats


def setup_logging(level: Optional[str] = None):
    """Configure logging."""
    settings = get_settings()
    level = (level or settings.log_level).upper()

    # Remove default handler
    logger.remove()

    # Add console handler
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
    )

    # Add file handler
    if settings.log_to_file:
        Path(settings.log_dir).mkdir(parents=True, exist_ok=True)
        logger.add(
            f"{settings.log_dir}/sbas_{datetime.now().strftime('%Y%m%d')}.log",
            rotation="1 day",
            retention="7 days",
            level=level
        )


def _asn_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated AS list, got {text!r}") from None


# =============================================================================
# Subcommands
# =============================================================================

def cmd_topo_stats(args) -> int:
    topology = read_relationships(args.topology)
    stats = topology_stats(topology)
    write_csv(pd.DataFrame({"metric": list(stats), "value": list(stats.values())}), args.out)
    return 0


def cmd_topo_generate(args) -> int:
    topology = generate_topology(args.n, args.seed, attach=args.attach, peer_fraction=args.peer_fraction)
    if args.out in (None, "-"):
        sys.stdout.write(serialize(topology))
    else:
        write_relationships(topology, args.out)
        logger.info(f"Wrote {topology!r} to {args.out}")
    return 0


def cmd_hijack(args) -> int:
    topology = read_relationships(args.topology)
    legit = args.legit_origin if args.legit_origin is not None else min(args.victims)
    tiebreak = tiebreak_from_name(args.tiebreak, args.seed)
    outcome = simulate_hijack(topology, args.victims, args.attacker, legit, args.rov, tiebreak)
    counts = outcome.counts()
    logger.info("Outcome: " + ", ".join(f"{state.value}={n}" for state, n in counts.items()))
    write_csv(hijack_frame(outcome), args.out)
    return 0


def _attackers(args, topology, exclude, seed_index: int = 0):
    if args.attackers:
        return tuple(args.attackers)
    return sample_ases(topology, args.attackers_sample, derive_seed(args.seed, seed_index), exclude=exclude)


def cmd_resilience(args) -> int:
    topology = read_relationships(args.topology)
    config = load_deployment(args.config)
    baseline, deployments = config.simulation_deployments()
    if baseline is not None:
        deployments = [baseline] + deployments
    if not deployments:
        raise ConfigError("simulation section lists no deployments", args.config)

    announcing = {asn for d in deployments for asn in d.nodes} | {deployments[0].legit_origin}
    attackers = _attackers(args, topology, announcing)
    report = run_campaign(
        topology,
        deployments,
        attackers,
        rov=args.rov,
        tiebreak=tiebreak_from_name(args.tiebreak, args.seed),
        trials=args.trials,
        baseline_id=baseline.id if baseline else None,
        no_route_is_resilient=get_settings().no_route_is_resilient,
        jobs=args.jobs,
    )
    write_csv(report.to_frame(), args.out)

    summary = report.summary_frame()
    for row in summary.itertuples(index=False):
        gain = f", {row.improvement_pct:+.1f}% vs baseline" if row.improvement_pct != "" else ""
        logger.info(f"{row.victim_id}: median {row.median:.3f}, mean {row.mean:.3f}{gain}")
    if args.summary:
        write_csv(summary, args.summary)
    return 0


def cmd_cdf(args) -> int:
    values = read_beta_csv(args.input)
    write_csv(cdf_frame(values.tolist()), args.out)
    return 0


def cmd_placement(args) -> int:
    topology = read_relationships(args.topology)
    config = load_deployment(args.config)
    sim = config.simulation
    if sim is None or not sim.candidates:
        raise ConfigError("simulation.candidates is required for placement", args.config)
    candidates = tuple(sim.candidates)
    if args.transit_only:
        candidates = transit_candidates(topology, candidates)
    k = args.k or sim.k
    if not k:
        raise ConfigError("placement needs k (flag --k or simulation.k)", args.config)

    settings = get_settings()
    excluded = set(candidates) | {sim.legit_origin}
    evaluation = _attackers(args, topology, excluded, seed_index=1)
    if settings.disjoint_samples and not args.attackers:
        optimisation = sample_ases(
            topology, args.attackers_sample, derive_seed(args.seed, 2), exclude=excluded | set(evaluation)
        )
    else:
        optimisation = evaluation

    problem = PlacementProblem(
        topology=topology,
        candidates=candidates,
        k=k,
        attackers=optimisation,
        legit_origin=sim.legit_origin,
        tiebreak=tiebreak_from_name(args.tiebreak, args.seed),
        rov=args.rov,
        trials=args.trials,
        no_route_is_resilient=settings.no_route_is_resilient,
        jobs=args.jobs,
        budget=settings.placement_budget,
    )

    results = {}
    if args.method in ("exhaustive", "both"):
        results["exhaustive"] = exhaustive_best(problem)
    if args.method in ("greedy", "both"):
        results["greedy"] = greedy_best(problem)
    write_csv(problem.evaluations_frame(), args.out)

    if evaluation is not optimisation:
        check = PlacementProblem(
            topology=topology, candidates=candidates, k=k, attackers=evaluation,
            legit_origin=sim.legit_origin, tiebreak=problem.tiebreak, rov=args.rov,
            trials=args.trials, no_route_is_resilient=settings.no_route_is_resilient, jobs=args.jobs,
        )
    else:
        check = problem
    for method, result in results.items():
        held_out = check.evaluate_many([result.nodes])[0]
        logger.info(
            f"{method}: nodes {' '.join(map(str, result.nodes))} "
            f"(optimised beta {result.beta:.4f}, evaluation beta {held_out.mean:.4f})"
        )
    return 0


def cmd_serial(args) -> int:
    topology = read_relationships(args.topology)
    config = load_deployment(args.config)
    baseline, deployments = config.simulation_deployments()
    if baseline is None or not deployments:
        raise ConfigError("serial study needs simulation.baseline and a deployment", args.config)
    sbas = next((d for d in deployments if d.id == args.sbas_id), None) if args.sbas_id else deployments[-1]
    if sbas is None:
        raise ConfigError(f"no deployment with id {args.sbas_id!r}", args.config)

    attackers = args.attackers or config.simulation.serial_hijackers
    study = serial_hijacker_study(
        topology,
        [a for a in attackers if a in topology],
        baseline,
        sbas,
        rov=args.rov,
        tiebreak=tiebreak_from_name(args.tiebreak, args.seed),
        trials=args.trials,
        no_route_is_resilient=get_settings().no_route_is_resilient,
        jobs=args.jobs,
    )
    write_csv(study.to_frame(), args.out)
    strongest = study.strongest_gain
    if strongest is not None:
        logger.info(f"Largest gain: AS{strongest.attacker} {strongest.gain:.1f}%")
    return 0


def cmd_sbas_check(args) -> int:
    """Run the control-plane pipeline over a deployment and check its invariants."""
    settings = get_settings()
    config = load_deployment(args.config)
    extra = read_roa_csv(args.roas) if args.roas else []
    try:
        control = config.control_plane(extra)
    except SbasLabError as e:
        raise ConfigError(str(e), args.config) from None

    problems = 0
    for outcome in control.announce_all():
        ann = outcome.announcement
        logger.info(f"AS{ann.customer} {ann.prefix} at {ann.ingress_pop}: {outcome.validation}, "
                    f"accepted by {len(outcome.accepted_at)} PoPs")
    if control.pool is not None:
        for customer in sorted(control.customers):
            ingress = control.active_ingress(customer)
            if ingress is not None:
                control.assign_address(customer, ingress)

    frames = []
    for pop_id in sorted(control.pops):
        for entry in control.egress_plan(pop_id):
            if entry.update.sbas_only and entry.targets.internet:
                logger.error(f"{pop_id}: SBAS-only {entry.update.prefix} exported to the Internet")
                problems += 1

        state = build_pop_state(control, pop_id, guard_window=settings.hijack_guard_window_s)
        for route in control.local_routes(pop_id):
            decision = forward(state, AddressCategory.GLOBAL, route.prefix.network_address)
            endpoint = decision.outer_destination
            if decision.action == Action.DELIVER and isinstance(decision.next_hop, CustomerVpn) and endpoint is not None:
                if control.plan.classify(endpoint) == AddressCategory.SECURE:
                    logger.error(f"{pop_id}: delivery for {route.prefix} loops into secure space")
                    problems += 1

        dump = dump_tables(state.tables)
        dump.insert(0, "pop", pop_id)
        frames.append(dump)

    write_csv(pd.concat(frames, ignore_index=True), args.out)
    if problems:
        logger.error(f"Deployment check found {problems} problem(s)")
        return 1
    logger.info("Deployment check passed")
    return 0


def cmd_latency(args) -> int:
    settings = get_settings()
    if args.breakdown:
        values = [float(v) for v in args.breakdown.split(",")]
        if len(values) != 4:
            raise ConfigError("--breakdown takes l_s_to_i,l_e_to_d,delay_pop,l_i_to_e")
        total = end_to_end(LatencyBreakdown(*values))
        write_csv(pd.DataFrame([{"latency_ms": total}]), args.out)
        return 0

    if not args.config:
        raise ConfigError("latency needs --config or --breakdown")
    config = load_deployment(args.config)
    model = config.latency_model(settings.pop_delay_ms)
    ingress = {c.asn: c.primary_ingress for c in config.customers}
    customers = sorted(c for c in ingress if c in model.ingress_ms)

    rows = []
    for src in customers:
        for dst in customers:
            if src == dst:
                continue
            rows.append({
                "src": src,
                "dst": dst,
                "src_pop": ingress[src],
                "dst_pop": ingress[dst],
                "latency_ms": customer_pair_latency(model, src, ingress[src], dst, ingress[dst]),
            })
    write_csv(pd.DataFrame(rows, columns=["src", "dst", "src_pop", "dst_pop", "latency_ms"]), args.out)
    return 0


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="sbas-lab", description="SBAS hijack-resilience lab")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    parser.add_argument("--jobs", type=int, default=settings.effective_jobs, help="Worker processes (default: SBAS_JOBS or CPU count)")
    parser.add_argument("--seed", type=int, default=settings.seed, help=f"Base seed (default: {settings.seed})")
    sub = parser.add_subparsers(dest="command", required=True)

    def simulation_flags(p, sample=True):
        p.add_argument("--topology", required=True, help="CAIDA serial-2 relationship file")
        p.add_argument("--rov", action="store_true", help="Attacker forges the legitimate origin")
        p.add_argument("--trials", type=int, default=settings.trials)
        p.add_argument("--tiebreak", default=settings.tiebreak, choices=["random", "lowest-asn"])
        p.add_argument("--out", default=None, help="Output CSV (default: stdout)")
        if sample:
            p.add_argument("--attackers-sample", type=int, default=settings.attacker_sample)
            p.add_argument("--attackers", type=_asn_list, default=None, help="Explicit attacker list")

    topo = sub.add_parser("topo", help="Topology utilities").add_subparsers(dest="topo_command", required=True)
    stats = topo.add_parser("stats", help="Node and edge counts")
    stats.add_argument("--topology", required=True)
    stats.add_argument("--out", default=None)
    stats.set_defaults(func=cmd_topo_stats)
    gen = topo.add_parser("generate", help="Synthetic relationship file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--attach", type=int, default=2)
    gen.add_argument("--peer-fraction", type=float, default=0.2)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=cmd_topo_generate)

    hijack = sub.add_parser("hijack", help="Single hijack simulation, per-AS outcome")
    simulation_flags(hijack, sample=False)
    hijack.add_argument("--victims", type=_asn_list, required=True)
    hijack.add_argument("--attacker", type=int, required=True)
    hijack.add_argument("--legit-origin", type=int, default=None)
    hijack.set_defaults(func=cmd_hijack)

    res = sub.add_parser("resilience", help="Resilience campaign over the configured deployments")
    simulation_flags(res)
    res.add_argument("--config", required=True)
    res.add_argument("--summary", default=None, help="Per-deployment summary CSV")
    res.set_defaults(func=cmd_resilience)

    cdf = sub.add_parser("cdf", help="CDF table from a resilience CSV")
    cdf.add_argument("--input", required=True)
    cdf.add_argument("--out", default=None)
    cdf.set_defaults(func=cmd_cdf)

    place = sub.add_parser("placement", help="Choose announcement nodes")
    simulation_flags(place)
    place.add_argument("--config", required=True)
    place.add_argument("--k", type=int, default=None)
    place.add_argument("--method", choices=["exhaustive", "greedy", "both"], default="both")
    place.add_argument("--transit-only", action="store_true")
    place.set_defaults(func=cmd_placement)

    serial = sub.add_parser("serial", help="Serial hijacker study")
    simulation_flags(serial, sample=False)
    serial.add_argument("--config", required=True)
    serial.add_argument("--attackers", type=_asn_list, default=None)
    serial.add_argument("--sbas-id", default=None)
    serial.set_defaults(func=cmd_serial)

    sbas = sub.add_parser("sbas", help="Deployment tools").add_subparsers(dest="sbas_command", required=True)
    check = sbas.add_parser("check", help="Validate a deployment config end to end")
    check.add_argument("--config", required=True)
    check.add_argument("--roas", default=None, help="Extra ROAs as CSV")
    check.add_argument("--out", default=None, help="Table dump CSV")
    check.set_defaults(func=cmd_sbas_check)

    lat = sub.add_parser("latency", help="End-to-end latency model")
    lat.add_argument("--config", default=None)
    lat.add_argument("--breakdown", default=None, help="l_s_to_i,l_e_to_d,delay_pop,l_i_to_e in ms")
    lat.add_argument("--out", default=None)
    lat.set_defaults(func=cmd_latency)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.log_level)

    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be at least 1")
    if getattr(args, "attackers_sample", 1) < 1:
        parser.error("--attackers-sample must be at least 1")

    try:
        return args.func(args)
    except FileNotFoundError as e:
        logger.error(f"File not found: {e.filename}")
    except (SbasLabError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
    return 1


if __name__ == "__main__":
    sys.exit(main())
