"""CSV and JSON reports with a metadata header.

CSV layout (gnuplot reads it with ``set datafile separator ","``)::

    # nlsderive 0.1.0
    # command: mb converge
    # seed: 0
    # params: {"beta": 0.4, ...}
    # passed: true
    N,dim,distance
    2,78,0.0572...

Floats are written with ``repr`` so that values round-trip exactly and the
bytes are reproducible.  The JSON file carries the same metadata, column
names and rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _plain(v):
    if hasattr(v, "item"):  # numpy scalars
        return v.item()
    return v


@dataclass
class Report:
    command: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    seed: int = 0
    passed: bool = True

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append([_plain(v) for v in values])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# nlsderive {__version__}\n")
        buf.write(f"# command: {self.command}\n")
        buf.write(f"# seed: {self.seed}\n")
        buf.write(f"# params: {json.dumps(self.params, sort_keys=True)}\n")
        buf.write(f"# passed: {_cell(self.passed)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "params": self.params,
            "passed": self.passed,
            "columns": self.columns,
            "rows": self.rows,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def write(self, path) -> list[Path]:
        """Write ``path`` (.csv or .json) and its mirror in the other format."""
        path = Path(path)
        stem = path.with_suffix("")
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return [csv_path, json_path]

    @classmethod
    def from_csv(cls, text: str) -> "Report":
        meta = {}
        lines = text.splitlines()
        body = []
        for line in lines:
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                meta[key] = val
            else:
                body.append(line)
        rows = list(csv.reader(body))
        return cls(
            command=meta.get("command", ""),
            columns=rows[0],
            rows=[[_parse(c) for c in r] for r in rows[1:]],
            params=json.loads(meta.get("params", "{}")),
            seed=int(meta.get("seed", 0)),
            passed=meta.get("passed") == "true",
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["command"], d["columns"], d["rows"], d["params"], d["seed"], d["passed"])
