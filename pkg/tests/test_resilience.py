"""Resilience metric, campaigns, CDFs and the serial-hijacker study."""

import numpy as np
import pytest
from loguru import logger

from src.analyzers.resilience import (
    Deployment,
    Scenario,
    beta_from_alphas,
    gain_percent,
    resilience,
    resilience_cdf,
    run_campaign,
    sample_ases,
    serial_hijacker_study,
)
from src.exceptions import EmptyInputError, ScenarioError, UnknownAsError
from src.simulation import LowestNextHopAsn, SeededRandom
from src.topology import Topology, generate_topology, random_small_topology

DET = LowestNextHopAsn()


def scenario(nodes, legit, attackers, **kwargs):
    kwargs.setdefault("tiebreak", DET)
    kwargs.setdefault("rov", False)
    return Scenario(Deployment("v", tuple(nodes), legit), tuple(attackers), **kwargs)


class TestGoldenCases:
    def test_four_as_example(self, four_as_topology):
        s = scenario([3], 3, [2], sources=(1, 4))
        assert resilience(four_as_topology, s) == 0.5

    def test_source_is_the_legitimate_origin(self, four_as_topology):
        s = scenario([3], 3, [2], sources=(3,))
        assert resilience(four_as_topology, s) == 1.0

    def test_default_sources_exclude_only_the_attacker(self, four_as_topology):
        # sources S, V, T: S is hijacked, V is the origin, T routes to V
        s = scenario([3], 3, [2])
        assert resilience(four_as_topology, s) == pytest.approx(2 / 3)

    def test_two_attackers_average(self, four_as_topology):
        # attacker T=4 attracts nobody: S and X both learn V's route from above
        s = scenario([3], 3, [2, 4])
        assert resilience(four_as_topology, s) == pytest.approx((2 / 3 + 1.0) / 2)

    def test_attacker_among_explicit_sources_is_pooled(self, four_as_topology):
        # X=2 hijacks S: 0/1; T=4 attracts neither S nor X: 2/2
        s = scenario([3], 3, [2, 4], sources=(1, 2))
        assert resilience(four_as_topology, s) == pytest.approx(2 / 3)

    def test_rov_turns_a_tie_win_into_a_loss(self):
        topo = Topology.from_pairs(p2c=[(1, 5), (1, 3)])
        assert resilience(topo, scenario([5], 5, [3])) == 0.5
        assert resilience(topo, scenario([5], 5, [3], rov=True)) == 1.0

    def test_no_route_switch(self):
        topo = Topology.from_pairs(p2c=[(1, 2)], p2p=[(3, 4)])
        assert resilience(topo, scenario([2], 2, [1], sources=(3, 4))) == 1.0
        assert resilience(topo, scenario([2], 2, [1], sources=(3, 4), no_route_is_resilient=False)) == 0.0

    def test_alpha_matrix(self):
        assert beta_from_alphas([[1, 0], [1, 1]]) == 0.75
        with pytest.raises(EmptyInputError):
            beta_from_alphas([])


class TestValidation:
    def test_empty_attackers(self):
        with pytest.raises(EmptyInputError):
            scenario([3], 3, [])

    def test_attacker_among_nodes(self):
        with pytest.raises(ScenarioError):
            scenario([3], 3, [3])

    def test_trials_must_be_positive(self):
        with pytest.raises(ScenarioError):
            scenario([3], 3, [2], trials=0)

    def test_only_source_is_the_attacker(self, four_as_topology):
        with pytest.raises(EmptyInputError):
            resilience(four_as_topology, scenario([3], 3, [2], sources=(2,)))

    def test_unknown_attacker(self, four_as_topology):
        with pytest.raises(UnknownAsError):
            resilience(four_as_topology, scenario([3], 3, [99]))

    def test_empty_deployment(self):
        with pytest.raises(ScenarioError):
            Deployment("v", (), 1)


class TestDeterminism:
    def test_deterministic_tiebreak_is_bit_identical(self):
        topo = generate_topology(200, seed=4)
        s = scenario([150], 150, [20, 80, 190], trials=3)
        assert resilience(topo, s) == resilience(topo, s)

    def test_trials_agree_without_random_ties(self):
        topo = generate_topology(200, seed=4)
        one = resilience(topo, scenario([150], 150, [20, 80], trials=1))
        three = resilience(topo, scenario([150], 150, [20, 80], trials=3))
        assert one == three

    def test_pool_size_does_not_change_results(self):
        topo = generate_topology(150, seed=8)
        s = scenario([120], 120, [5, 30, 60, 90], tiebreak=SeededRandom(99), trials=2)
        assert resilience(topo, s, jobs=1) == resilience(topo, s, jobs=2)


class TestCdf:
    def test_examples(self):
        assert resilience_cdf([0.5, 1.0, 0.5]) == [(0.5, pytest.approx(2 / 3)), (1.0, 1.0)]
        assert resilience_cdf([1.0]) == [(1.0, 1.0)]
        assert resilience_cdf([0.0, 1.0]) == [(0.0, 0.5), (1.0, 1.0)]

    def test_monotone_and_complete(self):
        values = np.random.default_rng(1).random(500).round(2)
        table = resilience_cdf(values.tolist())
        xs = [x for x, _ in table]
        ys = [y for _, y in table]
        assert xs == sorted(set(xs))
        assert ys == sorted(ys)
        assert ys[-1] == 1.0

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            resilience_cdf([])
        with pytest.raises(ValueError):
            resilience_cdf([0.5, 1.5])


class TestCampaign:
    def test_report_and_improvement(self, four_as_topology):
        base = Deployment("base", (3,), 3)
        sbas = Deployment("sbas", (1, 3), 3)
        report = run_campaign(four_as_topology, [base, sbas], [2, 4], rov=False, tiebreak=DET, baseline_id="base")

        assert report.summaries["base"].betas == {2: pytest.approx(2 / 3), 4: 1.0}
        assert report.summaries["sbas"].betas == {2: 1.0, 4: 1.0}
        assert report.improvement("sbas") == pytest.approx(20.0)

        frame = report.to_frame()
        assert list(frame.columns) == ["victim_id", "nodes", "attacker", "rov", "beta"]
        assert len(frame) == 4
        assert set(frame["nodes"]) == {"3", "1 3"}

    def test_attackers_announcing_are_skipped(self, four_as_topology):
        sbas = Deployment("sbas", (1, 3), 3)
        report = run_campaign(four_as_topology, [sbas], [1, 2], rov=False, tiebreak=DET)
        assert list(report.summaries["sbas"].betas) == [2]

    def test_unknown_baseline(self, four_as_topology):
        with pytest.raises(ScenarioError):
            run_campaign(four_as_topology, [Deployment("a", (3,), 3)], [2], False, DET, baseline_id="b")


class TestSampling:
    def test_sample_is_seeded_sorted_and_excludes(self):
        topo = generate_topology(100, seed=1)
        first = sample_ases(topo, 10, seed=5, exclude={1, 2, 3})
        assert first == sample_ases(topo, 10, seed=5, exclude={1, 2, 3})
        assert list(first) == sorted(first)
        assert len(set(first)) == 10
        assert not {1, 2, 3} & set(first)

    def test_oversized_sample_returns_everything(self):
        topo = Topology.from_pairs(p2c=[(1, 2), (1, 3)])
        assert sample_ases(topo, 10, seed=0, exclude={1}) == (2, 3)

    def test_nothing_to_sample(self):
        topo = Topology.from_pairs(p2c=[(1, 2)])
        with pytest.raises(EmptyInputError):
            sample_ases(topo, 1, seed=0, exclude={1, 2})


class TestSerialHijackers:
    def test_gain_formula(self):
        assert gain_percent(0.2, 0.5) == pytest.approx(150.0)
        assert gain_percent(0.4, 0.4) == 0.0
        assert gain_percent(0.0, 0.5) is None

    def test_study(self, four_as_topology):
        study = serial_hijacker_study(
            four_as_topology, [2], Deployment("base", (3,), 3), Deployment("sbas", (1, 3), 3),
            rov=False, tiebreak=DET,
        )
        (row,) = study.rows
        assert row.beta_base == pytest.approx(2 / 3)
        assert row.beta_sbas == 1.0
        assert row.gain == pytest.approx(50.0)
        assert study.median_gain == pytest.approx(50.0)
        assert study.strongest_gain.attacker == 2
        assert list(study.to_frame().columns) == ["attacker", "beta_base", "beta_sbas", "gain_pct"]

    def test_preconditions(self, four_as_topology):
        with pytest.raises(EmptyInputError):
            serial_hijacker_study(four_as_topology, [], Deployment("a", (3,), 3), Deployment("b", (1,), 3), False, DET)
        with pytest.raises(ScenarioError):
            serial_hijacker_study(four_as_topology, [2], Deployment("a", (3,), 3), Deployment("b", (1,), 1), False, DET)


def test_rov_rarely_hurts_the_victim():
    rng = np.random.default_rng(7)
    total = better_or_equal = 0
    for _ in range(200):
        topo = random_small_topology(rng, int(rng.integers(5, 31)), p_link=0.15)
        nodes = sorted(topo.nodes)
        for _ in range(5):
            victim, attacker = (int(x) for x in rng.choice(nodes, size=2, replace=False))
            plain = resilience(topo, scenario([victim], victim, [attacker]))
            forged = resilience(topo, scenario([victim], victim, [attacker], rov=True))
            total += 1
            if forged >= plain:
                better_or_equal += 1
            else:
                logger.warning(f"ROV lowered resilience: victim {victim}, attacker {attacker}: {plain} -> {forged}")
    assert better_or_equal / total >= 0.98


def test_more_announcement_nodes_raise_median_resilience():
    topo = generate_topology(1000, seed=47065)
    degree = {asn: len(topo.neighbors(asn)) for asn in topo.nodes}
    stub = max(asn for asn in topo.nodes if not topo.customers(asn))
    hubs = tuple(sorted(sorted(topo.nodes, key=lambda a: (-degree[a], a))[:6]))
    attackers = sample_ases(topo, 100, seed=3, exclude=set(hubs) | {stub})

    single = run_campaign(topo, [Deployment("one", (stub,), stub)], attackers, False, DET)
    six = run_campaign(topo, [Deployment("six", hubs, stub)], attackers, False, DET)
    assert six.summaries["six"].median > single.summaries["one"].median
