"""Ingress validation, redistribution, authorization, egress and the control plane."""

import threading

import numpy as np
import pytest

from src.exceptions import ConfigError, UnknownPopError
from src.sbas.control import (
    CustomerAnnouncement,
    CustomerConfig,
    IbgpUpdate,
    LocalRoute,
    PopAuthorization,
    PopConfig,
    RejectReason,
    RoaIndex,
    RoaRecord,
    SbasCommunity,
    SbasControlPlane,
    check_pop_authorization,
    egress_targets,
    make_egress_announcement,
    redistribute,
    validate_ingress,
)
from src.topology.models import parse_address, parse_prefix

from .conftest import make_pops

P24 = parse_prefix("1.0.0.0/24")
ROAS = [RoaRecord(P24, 65001, 24)]
SBAS_ONLY = frozenset({SbasCommunity.SBAS_ONLY})


def ann(path, prefix=P24, pop="P1", communities=frozenset()):
    return CustomerAnnouncement(prefix, tuple(path), pop, path[-1], communities)


def update(from_pop="P1", to_pop="P2", communities=frozenset(), path=(65001,), prefix=P24):
    return IbgpUpdate(prefix, path[-1], path[-1], from_pop, to_pop, tuple(path), communities)


class TestValidateIngress:
    def test_origin_only(self):
        assert validate_ingress(ann([65001]), ROAS).valid

    def test_prepending(self):
        assert validate_ingress(ann([65001, 65001, 65001]), ROAS).valid

    def test_foreign_asn(self):
        assert validate_ingress(ann([65002, 65001]), ROAS).reason == RejectReason.FOREIGN_ASN_IN_PATH

    def test_no_roa(self):
        assert validate_ingress(ann([65001], prefix=parse_prefix("9.0.0.0/24")), ROAS).reason == RejectReason.NO_ROA

    def test_origin_mismatch(self):
        assert validate_ingress(ann([65009]), ROAS).reason == RejectReason.ORIGIN_MISMATCH

    def test_max_length(self):
        more_specific = parse_prefix("1.0.0.0/25")
        assert validate_ingress(ann([65001], prefix=more_specific), ROAS).reason == RejectReason.MAX_LENGTH_EXCEEDED
        loose = [RoaRecord(P24, 65001, 25)]
        assert validate_ingress(ann([65001], prefix=more_specific), loose).valid

    def test_any_matching_roa_suffices(self):
        roas = [RoaRecord(parse_prefix("1.0.0.0/16"), 65001, 16), RoaRecord(P24, 65001, 24)]
        assert validate_ingress(ann([65001]), roas).valid

    def test_str(self):
        assert str(validate_ingress(ann([65001]), ROAS)) == "Validated"
        assert str(validate_ingress(ann([65002, 65001]), ROAS)) == "Rejected(ForeignAsnInPath)"

    def test_roa_bounds(self):
        with pytest.raises(ConfigError):
            RoaRecord(P24, 65001, 23)
        with pytest.raises(ConfigError):
            RoaRecord(P24, 65001, 33)

    def test_empty_path_is_invalid(self):
        with pytest.raises(ValueError):
            CustomerAnnouncement(P24, (), "P1", 65001)

    def test_unknown_community_is_invalid(self):
        with pytest.raises(ValueError):
            CustomerAnnouncement(P24, (65001,), "P1", 65001, frozenset({"no-such-tag"}))


def test_validation_fuzz():
    rng = np.random.default_rng(42)
    origins = np.arange(64512, 64532)
    index = RoaIndex(
        RoaRecord(parse_prefix(f"{10 + i}.0.0.0/16"), int(origins[i]), 24) for i in range(len(origins))
    )
    misclassified = 0
    for _ in range(100_000):
        i = int(rng.integers(len(origins)))
        origin = int(origins[i])
        length = int(rng.integers(16, 25))
        third = int(rng.integers(256)) & ~((1 << max(0, 24 - length)) - 1) if length > 16 else 0
        prefix = parse_prefix(f"{10 + i}.0.{third}.0/{length}")
        path = [origin] * int(rng.integers(1, 5))
        foreign = rng.random() < 0.5
        if foreign:
            other = int(rng.choice(origins[origins != origin]))
            path.insert(int(rng.integers(0, len(path))), other)
        result = validate_ingress(CustomerAnnouncement(prefix, tuple(path), "P1", origin), index)
        if foreign and result.valid:
            misclassified += 1
        if not foreign and not result.valid:
            misclassified += 1
    assert misclassified == 0


class TestAuthorization:
    def test_authorized_pop(self):
        auth = PopAuthorization({P24: frozenset({"P1"})})
        assert check_pop_authorization(update("P1"), auth)
        assert not check_pop_authorization(update("P3"), auth)

    def test_no_record_allows_all(self):
        assert check_pop_authorization(update("P3"), PopAuthorization())


class TestRedistribute:
    def test_full_mesh(self):
        updates = redistribute(ann([65001]), make_pops(3))
        assert [u.to_pop for u in updates] == ["P2", "P3"]
        assert all(u.from_pop == "P1" and u.as_path == (65001,) for u in updates)

    def test_single_pop(self):
        assert redistribute(ann([65001]), make_pops(1)) == []

    def test_sbas_only_still_redistributed(self):
        updates = redistribute(ann([65001], communities=SBAS_ONLY), make_pops(3))
        assert [u.to_pop for u in updates] == ["P2", "P3"]
        assert all(u.sbas_only for u in updates)

    def test_unknown_ingress(self):
        with pytest.raises(UnknownPopError):
            redistribute(ann([65001], pop="P9"), make_pops(3))

    def test_size_is_pops_minus_one(self):
        for n in range(1, 8):
            updates = redistribute(ann([65001]), make_pops(n))
            assert len(updates) == n - 1
            assert all(u.to_pop != "P1" for u in updates)


class TestEgress:
    def pop(self):
        return PopConfig("P2", 64500, parse_prefix("10.255.0.4/30"), frozenset({174}), frozenset({65010}))

    def test_untagged(self):
        targets = egress_targets(update(), self.pop(), PopAuthorization())
        assert targets.customers == {65010} and targets.internet == {174}

    def test_sbas_only(self):
        targets = egress_targets(update(communities=SBAS_ONLY), self.pop(), PopAuthorization())
        assert targets.customers == {65010} and targets.internet == frozenset()

    def test_unauthorized(self):
        targets = egress_targets(update(), self.pop(), PopAuthorization({P24: frozenset({"P3"})}))
        assert not targets.customers and not targets.internet

    def test_origin_customer_is_kept(self):
        pop = PopConfig("P2", 64500, parse_prefix("10.255.0.4/30"), frozenset(), frozenset({65001, 65010}))
        assert egress_targets(update(), pop, PopAuthorization()).customers == {65001, 65010}

    def test_external_paths(self):
        assert make_egress_announcement(update(), 64500).as_path == (64500, 65001)
        assert make_egress_announcement(update(path=(65001, 65001)), 64500).as_path == (64500, 65001, 65001)
        pool = update(path=(64500,), prefix=parse_prefix("2.0.0.1/32"))
        assert make_egress_announcement(pool, 64500).as_path == (64500,)


class TestControlPlane:
    def test_announce_reaches_every_other_pop(self, control_plane):
        outcome = control_plane.announce(65001, "1.0.0.0/24")
        assert outcome.validation.valid
        assert outcome.accepted_at == ["P2", "P3"]
        assert [u.prefix for u in control_plane.ibgp_routes("P3")] == [P24]
        assert control_plane.local_routes("P1")[0].customer == 65001

    def test_rejected_announcement_is_not_redistributed(self, control_plane):
        outcome = control_plane.announce(65001, "1.0.0.0/24", as_path=[65002, 65001])
        assert outcome.validation.reason == RejectReason.FOREIGN_ASN_IN_PATH
        assert outcome.updates == []
        assert control_plane.ibgp_routes("P2") == []

    def test_sbas_only_never_leaves(self, control_plane):
        control_plane.announce_all()
        for pop_id in control_plane.pops:
            for entry in control_plane.egress_plan(pop_id):
                if entry.update.sbas_only:
                    assert entry.targets.internet == frozenset()
                    assert entry.external is None

    def test_customer_egress_keeps_origin(self, control_plane):
        control_plane.announce_all()
        (entry,) = [e for e in control_plane.egress_plan("P3") if e.update.prefix == P24]
        assert entry.external.as_path == (64500, 65001)
        assert entry.external.as_path[-1] == 65001

    def test_unauthorized_pop_is_dropped_on_receipt(self):
        customers = [CustomerConfig(65001, (P24,), "P3")]
        auth = PopAuthorization({P24: frozenset({"P1"})})
        control = SbasControlPlane(64500, make_pops(3), customers, ROAS, authorization=auth)
        outcome = control.announce(65001, P24)
        assert outcome.accepted_at == []
        assert outcome.rejected_at == {"P1": "Unauthorized", "P2": "Unauthorized"}

    def test_remote_pops_revalidate(self, control_plane):
        # pool announcements skip ingress checks; receivers still need a covering ROA
        control_plane.roas = RoaIndex()
        control_plane.assign_address("laptop", "P2")
        assert control_plane.ibgp_routes("P1") == []
        assert control_plane.ibgp_routes("P3") == []

    def test_failover_moves_ingress_without_revalidation(self, control_plane):
        control_plane.announce(65001, P24)
        control_plane.roas = RoaIndex()
        moved = control_plane.fail_pop("P1")
        assert moved == {65001: "P2"}
        assert control_plane.active_ingress(65001) == "P2"
        assert control_plane.local_routes("P2") == [LocalRoute(P24, 65001)]
        routes = control_plane.ibgp_routes("P3")
        assert [(u.prefix, u.from_pop) for u in routes] == [(P24, "P2")]
        assert control_plane.ibgp_routes("P1") == []

    def test_assignment_is_announced(self, control_plane):
        host = control_plane.assign_address("laptop", "P2")
        assert host == parse_prefix("2.0.0.1/32")
        for pop_id in ("P1", "P3"):
            (route,) = control_plane.ibgp_routes(pop_id)
            assert route.prefix == host and route.from_pop == "P2" and route.customer == "laptop"
        assert control_plane.local_routes("P2")[0].customer == "laptop"
        # idempotent: no second notification
        control_plane.assign_address("laptop", "P2")
        assert len(control_plane.ibgp_routes("P1")) == 1

    def test_failover_moves_pool_address(self, control_plane):
        control_plane.announce_all()
        host = control_plane.assign_address(65001, "P1")
        control_plane.roas = RoaIndex()
        control_plane.fail_pop("P1")
        assert LocalRoute(host, 65001) in control_plane.local_routes("P2")
        routes = {(u.prefix, u.from_pop) for u in control_plane.ibgp_routes("P3")}
        assert (host, "P2") in routes
        assert (host, "P1") not in routes

    def test_failover_strands_holder_without_backup(self, control_plane):
        host = control_plane.assign_address("laptop", "P1")
        control_plane.fail_pop("P1")
        assert all(r.prefix != host for pop_id in ("P2", "P3") for r in control_plane.local_routes(pop_id))
        assert control_plane.ibgp_routes("P2") == []
        # reattaching keeps the address and announces it from the new PoP
        assert control_plane.assign_address("laptop", "P3") == host
        assert [(u.prefix, u.from_pop) for u in control_plane.ibgp_routes("P2")] == [(host, "P3")]

    def test_assignment_at_failed_pop(self, control_plane):
        control_plane.fail_pop("P3")
        with pytest.raises(ConfigError):
            control_plane.assign_address("laptop", "P3")

    def test_pool_assignment_outside_the_control_plane(self, control_plane):
        host = control_plane.pool.assign("printer")
        assert control_plane.ibgp_routes("P1") == []
        assert control_plane.assign_address("printer", "P3") == host
        assert [(u.prefix, u.from_pop) for u in control_plane.ibgp_routes("P1")] == [(host, "P3")]
        assert control_plane.local_routes("P3") == [LocalRoute(host, "printer")]

    def test_concurrent_assignments_keep_their_pop(self, control_plane):
        holders = [(f"host-{i}", f"P{i % 3 + 1}") for i in range(60)]
        hosts = {}

        def worker(chunk):
            for holder, pop_id in chunk:
                hosts[holder] = control_plane.assign_address(holder, pop_id)

        threads = [threading.Thread(target=worker, args=(holders[t::6],)) for t in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert len(set(hosts.values())) == 60
        copies = {
            pop_id: {(u.prefix, u.from_pop) for u in control_plane.ibgp_routes(pop_id)}
            for pop_id in control_plane.pops
        }
        for holder, pop_id in holders:
            assert LocalRoute(hosts[holder], holder) in control_plane.local_routes(pop_id)
            for other in set(control_plane.pops) - {pop_id}:
                assert (hosts[holder], pop_id) in copies[other]
        assert sum(len(c) for c in copies.values()) == 60 * 2

    def test_secure_prefixes_longer_than_24_are_rejected(self):
        long_prefix = parse_prefix("1.0.0.0/25")
        with pytest.raises(ConfigError, match="longer than /24"):
            SbasControlPlane(64500, make_pops(2), [CustomerConfig(65001, (long_prefix,), "P1")],
                             [RoaRecord(long_prefix, 65001, 25)])
        with pytest.raises(ConfigError, match="longer than /24"):
            SbasControlPlane(64500, make_pops(2), pool=parse_prefix("2.0.0.0/25"))
        v6 = CustomerConfig(65001, (parse_prefix("2001:db8:1::/48"),), "P1")
        assert SbasControlPlane(64500, make_pops(2), [v6]).customers[65001] == v6

    def test_config_invariants(self):
        with pytest.raises(ConfigError):
            SbasControlPlane(64500, [])
        with pytest.raises(UnknownPopError):
            SbasControlPlane(64500, make_pops(2), [CustomerConfig(65001, (P24,), "P7")])
        secure_endpoint = CustomerConfig(65001, (P24,), "P1", vpn_endpoint=parse_address("1.0.0.9"))
        with pytest.raises(ConfigError):
            SbasControlPlane(64500, make_pops(2), [secure_endpoint])


def test_sbas_only_containment_over_random_configs():
    rng = np.random.default_rng(99)
    for trial in range(10_000):
        n_pops = int(rng.integers(1, 5))
        pops = make_pops(n_pops, peers=rng.choice([174, 1299, 3356], size=int(rng.integers(0, 3)), replace=False).tolist())
        customers, roas = [], []
        for c in range(int(rng.integers(1, 4))):
            asn = 65001 + c
            prefix = parse_prefix(f"{20 + c}.{trial % 250}.0.0/24")
            tagged = frozenset({"sbas-only"}) if rng.random() < 0.5 else frozenset()
            customers.append(CustomerConfig(asn, (prefix,), f"P{int(rng.integers(1, n_pops + 1))}", (), tagged))
            roas.append(RoaRecord(prefix, asn, 24))
        records = {}
        if rng.random() < 0.3:
            records[customers[0].prefixes[0]] = frozenset(rng.choice([p.id for p in pops], size=1).tolist())
        control = SbasControlPlane(64500, pops, customers, roas, authorization=PopAuthorization(records))
        control.announce_all()

        tagged_prefixes = {c.prefixes[0] for c in customers if c.communities}
        for pop_id in control.pops:
            for entry in control.egress_plan(pop_id):
                if entry.update.prefix in tagged_prefixes:
                    assert entry.targets.internet == frozenset()
