"""
Tests for online partition assignment, divergence checks and migration.
"""

import pytest

from src.bench import WorkloadConfig, generate_workload
from src.core.exceptions import ConsistencyError, ParameterError
from src.core.version_graph import as_rlist
from src.engine import read_version
from src.maintain import (
    MaintenancePolicy,
    PartitionMaintainer,
    assign_on_commit,
    execute_migration,
    maintenance_check,
    modification_cost,
    parse_gamma,
    plan_migration,
)
from src.partition import PartitioningScheme, lyresplit, scheme_from_store
from tests.conftest import PEOPLE_ROWS, PEOPLE_SCHEMA


def disjoint_chain(engine, name="chain", length=3):
    """v1 -> v2 -> ... where no version shares a record with its parent."""
    engine.init(name, PEOPLE_SCHEMA, ["id"], rows=PEOPLE_ROWS)
    for vid in range(2, length + 1):
        rows = [(k, f"n{vid}_{k}", vid) for k in range(1, 6)]
        engine.commit_delta(name, [vid - 1], [], rows, f"v{vid}")
    return engine.open(name)


def overlapping_store(engine):
    """Five versions sharing records, all still in the first partition."""
    engine.init("shared", PEOPLE_SCHEMA, ["id"], rows=PEOPLE_ROWS)
    engine.commit_delta("shared", [1], [1, 2, 3], [(6, "fay", 25)], "v2")
    engine.commit_delta("shared", [1], [3, 4, 5], [(7, "gus", 61)], "v3")
    engine.commit_delta("shared", [2], [1, 2, 6], [(8, "hal", 19), (9, "ivy", 44)], "v4")
    engine.commit_delta("shared", [3], [4, 5, 7], [(10, "jon", 38)], "v5")
    return engine.open("shared")


def version_values(store):
    return {v: [r.values for r in read_version(store, v)[0]] for v in store.vids}


def split_shared(graph):
    """v1, v2, v4 apart from v3, v5: partition 1 stays with rids 7 and 10 deleted."""
    return PartitioningScheme.from_groups(graph, [[1, 2, 4], [3, 5]])


@pytest.mark.unit
class TestPolicy:
    def test_defaults_and_budget(self):
        policy = MaintenancePolicy()
        assert policy.budget(100) == 150
        assert policy.gamma_text() == "1.5x"
        absolute = MaintenancePolicy(gamma=5000, gamma_is_multiple=False)
        assert absolute.budget(100) == 5000
        assert absolute.gamma_text() == "5000"

    def test_validation(self):
        with pytest.raises(ParameterError):
            MaintenancePolicy(mu=1.0)
        with pytest.raises(ParameterError):
            MaintenancePolicy(gamma=0.5)
        with pytest.raises(ParameterError):
            MaintenancePolicy(check_every=0)
        with pytest.raises(ParameterError):
            MaintenancePolicy(delta_star=1.5)
        with pytest.raises(ParameterError):
            MaintenancePolicy(picker="random")

    def test_parse_gamma(self):
        assert parse_gamma("2x") == (2.0, True)
        assert parse_gamma(" 1.5X ") == (1.5, True)
        assert parse_gamma("5000") == (5000.0, False)
        assert parse_gamma(300) == (300.0, False)
        with pytest.raises(ParameterError):
            parse_gamma("lots")

    def test_dict_round_trip_ignores_unknown_keys(self):
        policy = MaintenancePolicy(gamma=2.0, mu=1.2, delta_star=0.4, enabled=True)
        data = policy.to_dict()
        data["legacy"] = "ignored"
        assert MaintenancePolicy.from_dict(data) == policy


@pytest.mark.unit
class TestAssignOnCommit:
    PARTITIONS = {1: 1, 2: 1, 3: 2}

    def decide(self, weights, storage=12, delta_star=0.5, parents=None):
        policy = MaintenancePolicy(gamma=1.5, delta_star=delta_star)
        return assign_on_commit(
            4, parents or sorted(weights), weights, self.PARTITIONS, 10, storage, policy
        )

    def test_joins_parent_without_delta(self):
        decision = self.decide({2: 1}, delta_star=None)
        assert decision.partition_id == 1
        assert not decision.new_partition

    def test_light_edge_opens_partition(self):
        decision = self.decide({2: 3})
        assert decision.new_partition
        assert decision.anchor == 2
        assert decision.weight == 3

    def test_heavy_edge_joins(self):
        assert self.decide({2: 6}).partition_id == 1

    def test_storage_at_budget_joins(self):
        assert self.decide({2: 3}, storage=15).partition_id == 1

    def test_anchor_is_heaviest_parent(self):
        decision = self.decide({2: 6, 3: 9})
        assert decision.anchor == 3
        assert decision.partition_id == 2
        tied = self.decide({2: 7, 3: 7})
        assert tied.anchor == 2

    def test_root_version_opens_partition(self):
        policy = MaintenancePolicy()
        assert assign_on_commit(1, [], {}, {}, 0, 0, policy).new_partition


@pytest.mark.unit
class TestMaintenanceCheck:
    def test_divergence_beyond_tolerance(self, merge_graph):
        single = PartitioningScheme.single_partition(merge_graph)
        policy = MaintenancePolicy(gamma=10, gamma_is_multiple=False, mu=1.2)
        result = maintenance_check(single, merge_graph, policy)
        assert result.migrate
        assert result.current_cost == 7
        assert result.best_cost == 5
        assert result.gamma == 10
        assert 16 / 36 < result.delta <= 0.75
        assert result.ratio == pytest.approx(1.4)

    def test_within_tolerance(self, merge_graph):
        single = PartitioningScheme.single_partition(merge_graph)
        policy = MaintenancePolicy(gamma=10, gamma_is_multiple=False, mu=1.5)
        assert not maintenance_check(single, merge_graph, policy).migrate


@pytest.mark.unit
class TestMigrationPlan:
    def test_greedy_pairing(self, merge_graph):
        old = PartitioningScheme.single_partition(merge_graph)
        new = PartitioningScheme.from_groups(merge_graph, [[1, 2], [3, 4]])
        plan = plan_migration(old, new, merge_graph)
        reused, fresh = plan.pairs[1], plan.pairs[0]
        assert reused.source == 1
        assert reused.inserts.tolist() == []
        assert reused.deletes.tolist() == [1]
        assert fresh.fresh
        assert fresh.inserts.tolist() == [1, 2, 3, 4]
        assert plan.estimated_write_cost == 5
        assert plan.naive_write_cost == 10
        assert plan.summary()["fresh"] == 1

    def test_modification_cost(self):
        assert modification_cost(as_rlist([1, 2, 3]), as_rlist([2, 3, 4, 5])) == 3

    def test_dropping_versions_is_inconsistent(self, merge_graph):
        old = PartitioningScheme.single_partition(merge_graph)
        new = PartitioningScheme.from_groups(merge_graph, [[1, 2]])
        with pytest.raises(ConsistencyError):
            plan_migration(old, new, merge_graph)


@pytest.mark.integration
class TestExecuteMigration:
    def test_migrated_layout_matches_a_rebuild(self, engine):
        store = overlapping_store(engine)
        before = version_values(store)
        graph = store.version_graph()
        target = PartitioningScheme.from_groups(graph, [[1, 2, 4], [3, 5]])
        execute_migration(store, plan_migration(scheme_from_store(store, graph), target, graph))

        reopened = engine.open("shared")
        assert scheme_from_store(reopened).same_layout(target)
        assert reopened.storage_cost() == target.storage_cost()
        for pid, vids in reopened.partitions().items():
            expected = graph.record_set(vids).tolist()
            assert sorted(r.rid for r in reopened.load_partition(pid).records) == expected
        assert version_values(reopened) == before

    def test_written_rows_equal_the_estimate(self, engine):
        store = overlapping_store(engine)
        graph = store.version_graph()
        target = split_shared(graph)
        plan = plan_migration(scheme_from_store(store, graph), target, graph)
        assert plan.pairs[0].source == 1
        assert plan.pairs[0].deletes.tolist() == [7, 10]
        assert plan.estimated_write_cost == 7

        execute_migration(store, plan)
        assert plan.records_written == plan.estimated_write_cost
        assert plan.summary()["records_written"] == 7
        kept = store.manifest.segments[1]
        assert kept.rows == 10
        assert kept.deleted == [7, 10]
        assert store.segment_rows(1) == 8

        reopened = engine.open("shared")
        segment = reopened.load_partition(1)
        assert sorted(segment.rids()) == [1, 2, 3, 4, 5, 6, 8, 9]
        assert segment.cost == 8
        assert reopened.storage_cost() == target.storage_cost() == 13

    def test_commit_restores_a_deleted_row(self, engine):
        store = overlapping_store(engine)
        graph = store.version_graph()
        target = split_shared(graph)
        execute_migration(store, plan_migration(scheme_from_store(store, graph), target, graph))
        size = store.manifest.segments[1].bytes

        vid = engine.commit_delta("shared", [4, 5], [1, 2, 6, 7], [], "bring back gus")
        assert store.partition_of(vid) == 1
        info = store.manifest.segments[1]
        assert info.deleted == [10]
        assert info.bytes == size
        assert info.rows == 10
        records, cost = read_version(engine.open("shared"), vid)
        assert (7, "gus", 61) in [r.values for r in records]
        assert cost == 9

    def test_per_version_layout(self, engine):
        store = overlapping_store(engine)
        before = version_values(store)
        graph = store.version_graph()
        target = PartitioningScheme.per_version(graph)
        execute_migration(store, plan_migration(scheme_from_store(store, graph), target, graph))
        assert store.storage_cost() == target.storage_cost()
        assert len(store.partitions()) == 5
        assert version_values(store) == before

    def test_matching_layout_is_a_no_op(self, engine):
        store = overlapping_store(engine)
        generation = store.manifest.generation
        current = scheme_from_store(store)
        execute_migration(store, plan_migration(current, current, store.version_graph()))
        assert store.manifest.generation == generation

    def test_commits_continue_after_migration(self, engine):
        store = overlapping_store(engine)
        graph = store.version_graph()
        target = PartitioningScheme.per_version(graph)
        execute_migration(store, plan_migration(scheme_from_store(store, graph), target, graph))
        vid = engine.commit_delta("shared", [4], [1, 2], [(11, "kim", 27)], "after")
        records, cost = engine.read_version("shared", vid)
        assert [r.values for r in records][-1] == (11, "kim", 27)
        assert cost == store.segment_rows(store.partition_of(vid))


@pytest.mark.integration
class TestPartitionMaintainer:
    def test_check_migrates_a_diverged_layout(self, engine):
        store = disjoint_chain(engine)
        assert store.storage_cost() == 15
        policy = MaintenancePolicy(gamma=1.0, mu=1.5)
        event = PartitionMaintainer(store, policy).check_and_migrate()
        assert event.migrated
        assert event.check.current_cost == 15
        assert event.check.best_cost == 5
        assert [sorted(g) for g in scheme_from_store(store).groups()] == [[1], [2], [3]]
        assert store.storage_cost() == 15
        assert store.read_policy()["delta_star"] == 1.0

    def test_check_without_divergence_keeps_layout(self, engine):
        store = disjoint_chain(engine)
        generation = store.manifest.generation
        policy = MaintenancePolicy(gamma=1.0, mu=10.0)
        event = PartitionMaintainer(store, policy).check_and_migrate()
        assert not event.migrated
        assert store.manifest.generation == generation

    def test_after_commit_needs_enabled_policy(self, engine):
        store = disjoint_chain(engine)
        assert PartitionMaintainer(store, MaintenancePolicy()).after_commit(3) is None
        every_other = MaintenancePolicy(enabled=True, check_every=2)
        assert PartitionMaintainer(store, every_other).after_commit(3) is None
        assert PartitionMaintainer(store, every_other).after_commit(2) is not None

    def test_optimize_with_budget(self, engine):
        store = disjoint_chain(engine)
        result = engine.maintainer("chain").optimize(gamma="1x")
        assert result.storage_before == 15
        assert result.checkout_before == 15
        assert result.storage_after == 15
        assert result.checkout_after == 5
        assert result.plan is not None
        summary = result.to_dict()
        assert summary["gamma"] == 15
        assert summary["migration"]["partitions"] == 3
        saved = store.read_policy()
        assert saved["enabled"] is True
        assert saved["delta_star"] == 1.0

    def test_optimize_with_fixed_delta(self, engine):
        store = overlapping_store(engine)
        graph = store.version_graph()
        result = engine.maintainer("shared").optimize(delta=0.6, check_every=1000)
        expected = lyresplit(graph, 0.6)
        assert result.delta == 0.6
        assert scheme_from_store(engine.open("shared")).same_layout(expected)
        assert result.storage_after == expected.storage_cost()

    def test_online_rule_opens_partitions_after_optimize(self, engine):
        store = disjoint_chain(engine)
        engine.maintainer("chain").optimize(gamma="10x", delta=1.0, check_every=1000)
        parent_pid = store.partition_of(3)
        first_free = store.next_partition_id
        rows = [(k, f"fresh{k}", 1) for k in range(1, 6)]
        vid = engine.commit_delta("chain", [3], [], rows, "light edge")
        assert store.partition_of(vid) != parent_pid
        assert store.partition_of(vid) == first_free

    def test_online_rule_joins_once_storage_reaches_budget(self, engine):
        store = disjoint_chain(engine)
        engine.maintainer("chain").optimize(gamma="1x", check_every=1000)
        assert store.storage_cost() == 15
        rows = [(k, f"fresh{k}", 1) for k in range(1, 6)]
        vid = engine.commit_delta("chain", [3], [], rows, "over budget")
        assert store.partition_of(vid) == store.partition_of(3)


SCALE_STREAM = dict(
    branches=100, versions_per_branch=10, target_records=31_000, inserts=30, n_attrs=3
)


def assert_matches_rebuild(store):
    """Every segment holds exactly the records its versions need."""
    graph = store.version_graph()
    for pid, vids in store.partitions().items():
        assert sorted(store.load_partition(pid).rids()) == graph.record_set(vids).tolist()


def replay_checked(engine, name, mu, warmup=None):
    """Commit the stream and run the divergence check after every commit.

    With ``warmup`` the CVD is optimized once at that version and checked
    only afterwards.
    """
    config = WorkloadConfig(name=name, **SCALE_STREAM)
    events = []

    def check(vid):
        maintainer = engine.maintainer(name)
        if warmup is not None and vid <= warmup:
            if vid == warmup:
                maintainer.optimize()
                maintainer.policy.enabled = False
                maintainer.save_policy()
            return
        event = maintainer.check_and_migrate()
        events.append(event)
        if event.migrated:
            assert_matches_rebuild(maintainer.store)
            after = scheme_from_store(maintainer.store).checkout_cost()
            assert after == pytest.approx(event.check.best_cost)
        else:
            assert event.check.current_cost <= mu * event.check.best_cost

    policy = MaintenancePolicy(gamma=1.5, mu=mu, check_every=1)
    generate_workload(engine, config, on_commit=check, policy=policy)
    return events


@pytest.mark.slow
class TestMaintenanceAtScale:
    def test_few_migrations_over_a_thousand_commits(self, engine):
        events = replay_checked(engine, "loose", 1.5)
        assert len(events) == 1000
        triggers = sum(e.migrated for e in events)
        assert 1 <= triggers <= 20

    def test_tight_tolerance_migrates_incrementally(self, engine):
        events = replay_checked(engine, "tight", 1.05, warmup=100)
        for event in events:
            if event.migrated:
                assert event.plan.records_written * 3 <= event.plan.naive_write_cost
