"""Experiment reports and their on-disk form (CSV tables, JSON summary, manifest)."""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

# fixed, documented headers for each table kind
TABLE_COLUMNS = {
    "rate_study": ("m", "error", "contraction_factor"),
    "mp_level": ("lambda_scale", "level", "threshold", "flag"),
    "solve_trace": ("iteration", "energy"),
    "pohozaev": ("N", "term", "value"),
    "nonexistence": ("N", "linf", "energy", "pohozaev", "residual", "converged"),
    "symbol_bounds": ("quantity", "k", "m", "constant"),
    "bubble": ("n", "check", "value"),
}


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


def table(name: str) -> Table:
    return Table(name, TABLE_COLUMNS[name])


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    kind: str
    summary: dict[str, Any] = field(default_factory=dict)
    tables: list[Table] = field(default_factory=list)
    assertions: list[Assertion] = field(default_factory=list)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.assertions.append(Assertion(name, bool(passed), detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "summary": self.summary,
            "assertions": [{"name": a.name, "passed": a.passed, "detail": a.detail}
                           for a in self.assertions],
        }


# ---------------------------------------------------------------------------
# formatting


def format_value(v) -> str:
    """Shortest round-trip text for floats; bools as lower-case words."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, tab: Table) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(tab.columns)
        for row in tab.rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def emit_plot_data(report: Report, out_dir: Path) -> list[Path]:
    """One tidy CSV per table; empty tables give header-only files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [write_csv(out_dir / f"{t.name}.csv", t) for t in report.tables]


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_outputs(report: Report, config: dict, out_dir: Path,
                  figures: Sequence[Path] = ()) -> dict[str, Path]:
    """Write summary, tables and manifest; the timestamp only appears in the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out_dir / "summary.json"}
    paths["summary"].write_text(dumps(report.to_json()))
    for p in emit_plot_data(report, out_dir):
        paths[p.stem] = p
    manifest = {
        "config": config,
        "version": package_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": sorted(p.name for p in paths.values()) + sorted(Path(f).name for f in figures),
    }
    paths["manifest"] = out_dir / "manifest.json"
    paths["manifest"].write_text(dumps(manifest))
    (out_dir / "summary.txt").write_text(render_text(report))
    paths["text"] = out_dir / "summary.txt"
    return paths


def render_text(report: Report) -> str:
    lines = [f"experiment: {report.kind}", f"status: {'PASS' if report.passed else 'FAIL'}"]
    for a in report.assertions:
        lines.append(f"  [{'ok' if a.passed else 'FAIL'}] {a.name}" + (f": {a.detail}" if a.detail else ""))
    for k in sorted(report.summary):
        v = report.summary[k]
        if isinstance(v, (int, float, str, bool, np.floating)):
            lines.append(f"  {k} = {format_value(v)}")
    return "\n".join(lines) + "\n"
