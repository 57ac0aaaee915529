"""Report data model, canonical serialization, and file emission."""

import json
import math

import pytest

from riskcert.errors import InvalidInputError
from riskcert.reports import Report, Table, config_hash, write_report


def small_report(**overrides):
    fields = dict(
        command="certify",
        seed=7,
        config_hash="abc123def4567890",
        scalars={"total": 1.25, "n": 100},
        tables={"sweep": Table(columns=("rho", "cost"), rows=((0.5, 1.0), (1.0, 2.5)))},
        warnings=("vacuous",),
    )
    fields.update(overrides)
    return Report(**fields)


class TestTable:
    def test_normalizes_to_tuples(self):
        t = Table(columns=["a", "b"], rows=[[1, 2], (3, 4)])
        assert t.columns == ("a", "b")
        assert t.rows == ((1, 2), (3, 4))

    def test_rejects_empty_columns(self):
        with pytest.raises(InvalidInputError):
            Table(columns=(), rows=())

    def test_rejects_ragged_rows(self):
        with pytest.raises(InvalidInputError, match="row 1"):
            Table(columns=("a", "b"), rows=((1, 2), (3,)))

    def test_rejects_nan_cell(self):
        with pytest.raises(InvalidInputError, match="NaN"):
            Table(columns=("a",), rows=((math.nan,),))

    def test_allows_infinite_cell(self):
        # a verifier that fails its deterministic cross-check records an
        # infinite observed value; the table must carry it
        t = Table(columns=("observed",), rows=((math.inf,),))
        assert t.rows[0][0] == math.inf


class TestReport:
    def test_rejects_nan_scalar(self):
        with pytest.raises(InvalidInputError, match="scalar"):
            small_report(scalars={"bad": math.nan})

    def test_rejects_non_table_value(self):
        with pytest.raises(InvalidInputError, match="must be a Table"):
            small_report(tables={"sweep": [[1, 2]]})

    def test_timestamp_defaults_to_none(self):
        assert small_report().timestamp is None

    def test_json_bytes_deterministic(self):
        assert small_report().to_json_bytes() == small_report().to_json_bytes()

    def test_json_bytes_newline_terminated(self):
        assert small_report().to_json_bytes().endswith(b"}\n")

    def test_json_document_content(self):
        doc = json.loads(small_report().to_json_bytes())
        assert doc["command"] == "certify"
        assert doc["seed"] == 7
        assert doc["timestamp"] is None
        assert doc["scalars"]["total"] == 1.25
        assert doc["tables"]["sweep"] == {
            "columns": ["rho", "cost"],
            "rows": [[0.5, 1.0], [1.0, 2.5]],
        }
        assert doc["warnings"] == ["vacuous"]

    def test_json_keys_sorted(self):
        text = small_report().to_json_bytes().decode()
        top_keys = [line.split('"')[1] for line in text.splitlines() if line.startswith('  "')]
        assert top_keys == sorted(top_keys)


class TestConfigHash:
    def test_independent_of_key_order(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})

    def test_sensitive_to_values(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_shape(self):
        digest = config_hash({"seed": 0})
        assert len(digest) == 16
        assert all(c in "0123456789abcdef" for c in digest)


class TestWriteReport:
    def test_writes_json_and_csv(self, tmp_path):
        paths = write_report(small_report(), tmp_path, basename="run")
        names = [p.split("/")[-1] for p in paths]
        assert names == ["run.json", "run.sweep.csv"]
        assert (tmp_path / "run.json").exists()
        assert (tmp_path / "run.sweep.csv").exists()

    def test_default_basename_is_command(self, tmp_path):
        paths = write_report(small_report(), tmp_path)
        assert paths[0].endswith("certify.json")

    def test_csv_exact_bytes(self, tmp_path):
        write_report(small_report(), tmp_path, basename="run")
        got = (tmp_path / "run.sweep.csv").read_bytes()
        assert got == b"rho,cost\n0.5,1.0\n1.0,2.5\n"

    def test_repr_floats_in_csv(self, tmp_path):
        report = small_report(
            tables={"t": Table(columns=("x",), rows=((1 / 3,),))}
        )
        write_report(report, tmp_path, basename="r")
        assert (tmp_path / "r.t.csv").read_bytes() == b"x\n0.3333333333333333\n"

    def test_byte_identical_across_calls(self, tmp_path):
        write_report(small_report(), tmp_path / "a", basename="run")
        write_report(small_report(), tmp_path / "b", basename="run")
        assert (tmp_path / "a/run.json").read_bytes() == (
            tmp_path / "b/run.json"
        ).read_bytes()
        assert (tmp_path / "a/run.sweep.csv").read_bytes() == (
            tmp_path / "b/run.sweep.csv"
        ).read_bytes()

    def test_rejects_non_report(self, tmp_path):
        with pytest.raises(InvalidInputError):
            write_report({"command": "x"}, tmp_path)
