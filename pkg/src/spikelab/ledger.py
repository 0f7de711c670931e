"""Append-only run ledger (CSV and JSON) and content-keyed checkpoints."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, SpikelabError
from .grids import SymmetricField, SymmetricGrid

__all__ = ["SCHEMA_VERSION", "RunLedger", "format_value", "save_field", "load_field",
           "FIELD_MAGIC", "checkpoint_dir"]

SCHEMA_VERSION = 1
FIELD_MAGIC = "# spikelab field v1"


def format_value(v):
    """Deterministic text form: shortest round-trip repr for floats."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


class RunLedger:
    """Rows with a fixed column schema, appended to ``<stem>.csv`` and ``<stem>.json``.

    The CSV starts with a comment line documenting every column, then the
    header.  Appending to a file written with another schema is refused.

    Parameters
    ----------
    directory : Path
    stem : str
    columns : dict
        Column name to one-line description, in output order.
    formats : sequence of {"csv", "json"}
    """

    def __init__(self, directory, stem: str, columns: dict[str, str], formats=("csv", "json")):
        self.dir = Path(directory)
        self.stem = stem
        self.columns = dict(columns)
        self.formats = tuple(formats)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._rows: list[dict] = []

    @property
    def csv_path(self) -> Path:
        return self.dir / f"{self.stem}.csv"

    @property
    def json_path(self) -> Path:
        return self.dir / f"{self.stem}.json"

    def schema_line(self) -> str:
        desc = "; ".join(f"{k}: {v}" for k, v in self.columns.items())
        return f"# spikelab ledger schema v{SCHEMA_VERSION} | {desc}"

    def append(self, row: dict) -> None:
        extra = set(row) - set(self.columns)
        if extra:
            raise SpikelabError(f"ledger {self.stem}: undocumented columns {sorted(extra)}")
        row = {k: row.get(k) for k in self.columns}
        if "csv" in self.formats:
            new = not self.csv_path.exists()
            if not new:
                with self.csv_path.open() as fh:
                    if fh.readline().rstrip("\n") != self.schema_line():
                        raise ConfigError(f"{self.csv_path} was written with a different schema")
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            if new:
                buf.write(self.schema_line() + "\n")
                w.writerow(list(self.columns))
            w.writerow([format_value(row[k]) for k in self.columns])
            with self.csv_path.open("a") as fh:
                fh.write(buf.getvalue())
        if "json" in self.formats:
            rows = []
            if self.json_path.exists():
                data = json.loads(self.json_path.read_text())
                if data.get("schema_version") != SCHEMA_VERSION or data.get("columns") != self.columns:
                    raise ConfigError(f"{self.json_path} was written with a different schema")
                rows = data["rows"]
            rows.append({k: _jsonable(row[k]) for k in self.columns})
            payload = {"schema_version": SCHEMA_VERSION, "columns": self.columns, "rows": rows}
            self.json_path.write_text(json.dumps(payload, indent=1) + "\n")
        self._rows.append(row)

    @property
    def rows(self) -> list[dict]:
        return list(self._rows)

    def read_csv(self) -> list[dict]:
        with self.csv_path.open() as fh:
            fh.readline()
            return list(csv.DictReader(fh))


def checkpoint_dir(root, key: str) -> Path:
    p = Path(root) / "checkpoints" / key
    p.mkdir(parents=True, exist_ok=True)
    return p


def save_field(path, f: SymmetricField, meta: dict | None = None) -> None:
    """Text checkpoint of a grid field: magic line, JSON header, axes, values."""
    g = f.grid
    head = {"N": g.N, "kind": g.kind, "n1": int(g.x1.size), "n2": int(g.x2.size), **(meta or {})}
    with open(path, "w") as fh:
        fh.write(FIELD_MAGIC + "\n")
        fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
        np.savetxt(fh, g.x1[None, :], fmt="%.17g")
        np.savetxt(fh, g.x2[None, :], fmt="%.17g")
        np.savetxt(fh, f.values, fmt="%.17g")


def load_field(path) -> tuple[SymmetricField, dict]:
    with open(path) as fh:
        if fh.readline().rstrip("\n") != FIELD_MAGIC:
            raise ConfigError(f"{path} is not a spikelab field checkpoint")
        head = json.loads(fh.readline()[2:])
        x1 = np.array(fh.readline().split(), dtype=float)
        x2 = np.array(fh.readline().split(), dtype=float)
        vals = np.loadtxt(fh, ndmin=2)
    grid = SymmetricGrid(x1, x2, head["N"], head["kind"])
    return grid.field(vals), head
