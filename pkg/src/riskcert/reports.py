"""Deterministic experiment reports.

A report is plain data: run metadata, named scalars, named tables, and
warnings. Serialization is canonical (sorted keys, repr-exact floats,
newline-terminated), so two runs with the same config and seed produce
byte-identical files. Timestamps default to None and are only filled when
the caller explicitly stamps the run, keeping the default output
reproducible.
"""

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

from .errors import InvalidInputError

__all__ = ["Table", "Report", "config_hash", "write_report"]


@dataclass(frozen=True)
class Table:
    """Rectangular named-column data; cells are numbers or strings."""

    columns: tuple
    rows: tuple

    def __post_init__(self):
        columns = tuple(str(c) for c in self.columns)
        if not columns:
            raise InvalidInputError("a table needs at least one column")
        rows = tuple(tuple(r) for r in self.rows)
        for idx, row in enumerate(rows):
            if len(row) != len(columns):
                raise InvalidInputError(
                    f"row {idx} has {len(row)} cells, expected {len(columns)}"
                )
            for cell in row:
                if isinstance(cell, float) and math.isnan(cell):
                    raise InvalidInputError(f"row {idx} contains NaN")
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "rows", rows)


@dataclass(frozen=True)
class Report:
    """One run's results: metadata, scalars, tables, warnings."""

    command: str
    seed: int
    config_hash: str
    timestamp: str = None
    scalars: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        for name, value in self.scalars.items():
            if isinstance(value, float) and math.isnan(value):
                raise InvalidInputError(f"scalar {name!r} is NaN")
        for name, table in self.tables.items():
            if not isinstance(table, Table):
                raise InvalidInputError(f"table {name!r} must be a Table")
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def to_json_bytes(self):
        doc = {
            "command": self.command,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "timestamp": self.timestamp,
            "scalars": dict(self.scalars),
            "tables": {
                name: {"columns": list(t.columns), "rows": [list(r) for r in t.rows]}
                for name, t in self.tables.items()
            },
            "warnings": list(self.warnings),
        }
        return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def config_hash(config):
    """Stable 16-hex-digit digest of a JSON-serializable config mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _csv_bytes(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([repr(c) if isinstance(c, float) else c for c in row])
    return buf.getvalue().encode("utf-8")


def write_report(report, out_dir, basename=None):
    """Emit ``basename``.json plus one CSV per table; returns the paths."""
    if not isinstance(report, Report):
        raise InvalidInputError("report must be a Report")
    basename = basename or report.command
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    json_path = os.path.join(out_dir, f"{basename}.json")
    with open(json_path, "wb") as fh:
        fh.write(report.to_json_bytes())
    paths.append(json_path)
    for name, table in report.tables.items():
        csv_path = os.path.join(out_dir, f"{basename}.{name}.csv")
        with open(csv_path, "wb") as fh:
            fh.write(_csv_bytes(table))
        paths.append(csv_path)
    return paths
