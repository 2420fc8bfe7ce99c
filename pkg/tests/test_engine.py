"""
Tests for checkout, commit, diff, scans and history over a CVD.
"""

import pandas as pd
import pytest

from src.core.exceptions import (
    ConstraintError,
    NotFoundError,
    OrphanTableError,
    ParameterError,
    ParseError,
    SchemaError,
    StagingConflictError,
)
from src.core.types import DType
from src.engine import MaterializedTable
from src.storage.csv_io import write_schema_file
from tests.conftest import PEOPLE_ROWS, PEOPLE_SCHEMA


def edited_people(engine):
    """v2: ada's age changes, eve is deleted, fay is added."""
    table = engine.checkout("people", [1], dest_name="work")
    table.set_row(0, (1, "ada", 37))
    table.delete_row(4)
    table.add_row((6, "fay", 25))
    engine.save_table(table)
    return engine.commit("work", "edit")


@pytest.mark.unit
class TestInit:
    def test_root_version(self, people):
        store = people.open("people")
        assert store.vids == [1]
        assert store.storage_cost() == 5
        assert [a.name for a in store.version_attributes(1)] == ["id", "name", "age"]

    def test_init_from_csv(self, engine, temp_dir):
        csv = temp_dir / "in.csv"
        pd.DataFrame(PEOPLE_ROWS, columns=["id", "name", "age"]).to_csv(csv, index=False)
        store = engine.init("from_csv", PEOPLE_SCHEMA, ["id"], csv_path=csv)
        records, _ = engine.read_version("from_csv", 1)
        assert store.rlist(1).tolist() == [1, 2, 3, 4, 5]
        assert records[3].values == (4, "dee", 52)

    def test_list_cvds(self, people):
        people.init("other", PEOPLE_SCHEMA)
        assert people.list_cvds() == ["other", "people"]

    def test_invalid_name(self, engine):
        with pytest.raises(ParameterError):
            engine.open("../escape")


@pytest.mark.unit
class TestCheckoutCommit:
    def test_unchanged_commit_reuses_every_record(self, people):
        table = people.checkout("people", [1], dest_name="copy")
        assert len(table.rows) == 5
        vid = people.commit("copy", "no change")
        store = people.open("people")
        assert vid == 2
        assert store.rlist(2).tolist() == store.rlist(1).tolist()
        assert store.storage_cost() == 5
        assert "copy" not in people.staging

    def test_edits_produce_fresh_records(self, people):
        vid = edited_people(people)
        store = people.open("people")
        assert store.rlist(vid).tolist() == [6, 2, 3, 4, 7]
        assert store.storage_cost() == 7
        assert store.meta(vid).parents == (1,)
        assert store.meta(vid).parent_weights == {1: 3}

    def test_diff(self, people):
        edited_people(people)
        result = people.diff("people", 1, 2)
        assert result.only_in_a == {1, 5}
        assert result.only_in_b == {6, 7}

    def test_earlier_versions_win_key_conflicts(self, people):
        edited_people(people)
        newer_first = people.checkout("people", [2, 1], dest_name="a")
        older_first = people.checkout("people", [1, 2], dest_name="b")
        assert len(newer_first.rows) == len(older_first.rows) == 6
        assert (1, "ada", 37) in newer_first.rows
        assert (1, "ada", 36) in older_first.rows
        assert (5, "eve", 33) in newer_first.rows

    def test_merge_commit_has_two_parents(self, people):
        edited_people(people)
        people.checkout("people", [2, 1], dest_name="merged")
        vid = people.commit("merged", "merge")
        assert people.open("people").meta(vid).parents == (2, 1)

    def test_readded_record_gets_fresh_rid(self, people):
        edited_people(people)
        rows = [(1, "ada", 37), (2, "bob", 41), (3, "cyd", 29), (4, "dee", 52), (5, "eve", 33)]
        vid = people.commit_derived("people", [2], rows, "bring eve back")
        rlist = people.open("people").rlist(vid).tolist()
        assert 5 not in rlist
        assert rlist[-1] == 8

    def test_checkout_counts_frequency(self, people):
        people.checkout("people", [1], dest_name="f")
        assert people.open("people").meta(1).checkout_frequency == 2

    def test_duplicate_staged_name(self, people):
        people.checkout("people", [1], dest_name="t")
        with pytest.raises(StagingConflictError):
            people.checkout("people", [1], dest_name="t")

    def test_checkout_errors(self, people, temp_dir):
        with pytest.raises(NotFoundError):
            people.checkout("people", [9], dest_name="t")
        with pytest.raises(ParameterError):
            people.checkout("people", [], dest_name="t")
        with pytest.raises(ParameterError):
            people.checkout("people", [1], dest_name="t", csv_path=temp_dir / "x.csv")

    def test_orphan_tables(self, people):
        with pytest.raises(OrphanTableError):
            people.commit("never_staged", "m")
        loose = MaterializedTable("loose", list(PEOPLE_SCHEMA), [(9, "z", 1)], [None])
        with pytest.raises(OrphanTableError):
            people.commit(loose, "m")


@pytest.mark.unit
class TestCommitValidation:
    def test_duplicate_primary_key(self, people):
        with pytest.raises(ConstraintError):
            people.commit_derived("people", [1], [(1, "a", 1), (1, "b", 2)], "dup")

    def test_null_primary_key(self, people):
        with pytest.raises(ConstraintError):
            people.commit_derived("people", [1], [(None, "a", 1)], "null")

    def test_missing_primary_key_column(self, people):
        columns = [("name", DType.TEXT), ("age", DType.INTEGER)]
        with pytest.raises(SchemaError):
            people.commit_derived("people", [1], [("a", 1)], "m", columns=columns)

    def test_failed_commit_leaves_store_untouched(self, people):
        with pytest.raises(ConstraintError):
            people.commit_derived("people", [1], [(1, "a", 1), (1, "b", 2)], "dup")
        store = people.open("people")
        assert store.vids == [1]
        assert store.next_rid == 6


@pytest.mark.unit
class TestSchemaEvolution:
    def test_widening_adds_a_pool_attribute(self, people):
        columns = [("id", DType.INTEGER), ("name", DType.TEXT), ("age", DType.DECIMAL)]
        rows = [(r[0], r[1], float(r[2])) for r in PEOPLE_ROWS]
        vid = people.commit_derived("people", [1], rows, "widen", columns=columns)
        store = people.open("people")
        assert len(store.attributes) == 4
        attrs = store.version_attributes(vid)
        assert [(a.attr_id, a.name, a.dtype) for a in attrs] == [
            (1, "id", DType.INTEGER),
            (2, "name", DType.TEXT),
            (4, "age", DType.DECIMAL),
        ]
        records, _ = read_all(people, vid)
        assert records[0] == (1, "ada", None, 36.0)

    def test_narrowing_is_rejected(self, people):
        wide = [("id", DType.INTEGER), ("name", DType.TEXT), ("age", DType.DECIMAL)]
        vid = people.commit_derived("people", [1], [(1, "ada", 36.5)], "widen", columns=wide)
        with pytest.raises(SchemaError):
            people.commit_derived(
                "people", [vid], [(1, "ada", 36)], "narrow", columns=PEOPLE_SCHEMA
            )

    def test_multi_version_checkout_widens_columns(self, people):
        wide = [("id", DType.INTEGER), ("name", DType.TEXT), ("age", DType.DECIMAL)]
        vid = people.commit_derived("people", [1], [(7, "gus", 40.5)], "widen", columns=wide)
        table = people.checkout("people", [vid, 1], dest_name="both")
        assert table.columns == wide
        assert (1, "ada", 36.0) in table.rows
        assert len(table.rows) == 6

    def test_merge_reuses_the_widened_pool_attribute(self, people):
        wide = [("id", DType.INTEGER), ("name", DType.TEXT), ("age", DType.DECIMAL)]
        vid = people.commit_derived("people", [1], [(7, "gus", 40.5)], "widen", columns=wide)
        people.checkout("people", [1, vid], dest_name="both")
        merged = people.commit("both", "merge")
        store = people.open("people")
        assert len(store.attributes) == 4
        assert [a.attr_id for a in store.version_attributes(merged)] == [1, 2, 4]
        records, _ = read_all(people, merged)
        assert (7, "gus", None, 40.5) in records


def read_all(engine, vid):
    records, cost = engine.read_version("people", vid)
    return [r.values for r in records], cost


@pytest.mark.unit
class TestCsvRoundTrip:
    def test_checkout_edit_commit(self, people, temp_dir):
        csv = temp_dir / "people.csv"
        schema = temp_dir / "people.schema"
        table = people.checkout("people", [1], csv_path=csv)
        write_schema_file(schema, table.columns)

        frame = pd.read_csv(csv)
        frame.loc[frame["id"] == 2, "age"] = 42
        frame.to_csv(csv, index=False)

        vid = people.commit(people.load_csv_table(csv, schema), "csv edit")
        store = people.open("people")
        assert store.rlist(vid).tolist() == [1, 6, 3, 4, 5]
        assert store.storage_cost() == 6

    def test_csv_table_cannot_be_loaded_as_staged(self, people, temp_dir):
        csv = temp_dir / "people.csv"
        people.checkout("people", [1], csv_path=csv)
        with pytest.raises(NotFoundError):
            people.load_table(str(csv.resolve()))

    def test_empty_text_and_null_survive_a_round_trip(self, engine, temp_dir):
        rows = [(1, "", 30), (2, None, 41), (3, "\\N", 29), (4, "x", None)]
        engine.init("blanks", PEOPLE_SCHEMA, primary_key=["id"], rows=rows)
        csv = temp_dir / "blanks.csv"
        schema = temp_dir / "blanks.schema"
        table = engine.checkout("blanks", [1], csv_path=csv)
        write_schema_file(schema, table.columns)
        assert "\\N" in csv.read_text()

        vid = engine.commit(engine.load_csv_table(csv, schema), "unchanged")
        store = engine.open("blanks")
        assert store.rlist(vid).tolist() == [1, 2, 3, 4]
        assert store.storage_cost() == 4
        records, _ = engine.read_version("blanks", vid)
        assert [r.values for r in records] == [(1, "", 30), (2, None, 41), (3, "\\N", 29), (4, "x")]


@pytest.mark.unit
class TestCommitDelta:
    def test_keep_and_append(self, people):
        vid = people.commit_delta("people", [1], [1, 2, 3], [(6, "fay", 25)], "delta")
        store = people.open("people")
        assert store.rlist(vid).tolist() == [1, 2, 3, 6]
        assert store.storage_cost() == 6

    def test_rejects_bad_input(self, people):
        with pytest.raises(ConstraintError):
            people.commit_delta("people", [1], [1, 99], [], "stray")
        with pytest.raises(ParameterError):
            people.commit_delta("people", [1], [1, 1], [], "dup")
        with pytest.raises(OrphanTableError):
            people.commit_delta("people", [], [1], [], "orphan")
        with pytest.raises(SchemaError):
            people.commit_delta("people", [1], [1], [(6, "fay")], "narrow row")
        with pytest.raises(ConstraintError):
            people.commit_delta("people", [1], [1], [(1, "again", 3)], "key clash")


@pytest.mark.unit
class TestScansAndHistory:
    def test_scan_version(self, people):
        assert [r.rid for r in people.scan_version("people", 1, "age>35")] == [1, 2, 4]
        assert [r.rid for r in people.scan_version("people", 1, "name='bob'")] == [2]
        assert len(people.scan_version("people", 1, "")) == 5
        assert people.scan_version("people", 1, "age>30,age<40") == [
            r for r in people.read_version("people", 1)[0] if r.rid in (1, 5)
        ]

    def test_scan_errors(self, people):
        with pytest.raises(SchemaError):
            people.scan_version("people", 1, "height>1")
        with pytest.raises(ParseError):
            people.scan_version("people", 1, "age")

    def test_lineage(self, people):
        people.commit_delta("people", [1], [1, 2], [], "v2")
        people.commit_delta("people", [1], [3, 4], [], "v3")
        people.commit_derived("people", [2, 3], [(1, "ada", 36), (3, "cyd", 29)], "merge")
        assert [m.vid for m in people.log("people")] == [1, 2, 3, 4]
        assert people.ancestors("people", 4) == [1, 2, 3]
        assert people.descendants("people", 1) == [2, 3, 4]
        assert people.descendants("people", 4) == []
        assert people.open("people").meta(1).children == (2, 3)
        with pytest.raises(NotFoundError):
            people.ancestors("people", 9)

    def test_drop_discards_staged_tables(self, people):
        people.checkout("people", [1], dest_name="t")
        assert people.drop_cvd("people") == ["t"]
        assert people.list_cvds() == []
        with pytest.raises(NotFoundError):
            people.open("people")
