"""Result files: history and snapshot CSVs, the summary, convergence tables
and an optional legacy-VTK polyline per snapshot.

CSV files use a comma separator, a header row, LF line endings and
round-trip float formatting, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenarios import (
    HISTORY_COLUMNS,
    SNAPSHOT_COLUMNS,
    Recorder,
    RunResult,
    ScenarioConfig,
    Snapshot,
    build_scenario,
    convergence_study,
)

INTEGER_COLUMNS = {"step", "stage", "n_initiated", "n_failed", "element", "node"}


def _cell(name, value):
    if value is None:
        return ""
    if name in INTEGER_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(c, v) for c, v in zip(columns, row)])


def read_table(path) -> dict:
    """Strict reader for the tables written here; empty cells become NaN."""
    with open(path, newline="", encoding="ascii") as fh:
        text = fh.read()
    if "\r" in text:
        raise ValueError(f"{path}: CR line ending")
    rows = list(csv.reader(text.splitlines()))
    header, body = rows[0], rows[1:]
    for r in body:
        if len(r) != len(header):
            raise ValueError(f"{path}: ragged row {r}")
    data = np.array([[float(v) if v else math.nan for v in r] for r in body], dtype=float)
    data = data.reshape(-1, len(header))
    return {c: data[:, i] for i, c in enumerate(header)}


def write_history(path, history: dict):
    cols = np.column_stack([history[c] for c in HISTORY_COLUMNS]) if len(history["step"]) else []
    write_table(path, HISTORY_COLUMNS, cols)


def write_snapshot(path, snap: Snapshot):
    write_table(path, SNAPSHOT_COLUMNS, snap.table)


def write_vtk(path, snap: Snapshot):
    """Legacy ASCII VTK: one two-point line per element plus nodal fields."""
    t = snap.table
    n = t.shape[0]
    idx = {c: i for i, c in enumerate(SNAPSHOT_COLUMNS)}
    lines = [
        "# vtk DataFile Version 3.0",
        f"beamfrac step {snap.step} time {snap.time!r}",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {n} double",
    ]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in t[:, [idx["x"], idx["y"], idx["z"]]]]
    n_el = n // 2
    lines.append(f"LINES {n_el} {3 * n_el}")
    lines += [f"2 {2 * e} {2 * e + 1}" for e in range(n_el)]
    lines.append(f"POINT_DATA {n}")
    for name in ("eps", "kappa_norm", "axial_force", "moment_norm"):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in t[:, idx[name]]]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _fmt(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value) if value else "-"
    if value is None:
        return "-"
    return str(value)


def headline(summary: dict) -> str:
    """One human-readable sentence with the run's key result."""
    if "f_cr_detected" in summary:
        f = summary["f_cr_detected"]
        if f is None:
            return "critical load not detected"
        return f"critical load {f:.6g} N (Euler {summary['f_cr_oracle']:.6g} N)"
    if "relative_l2_error" in summary:
        return f"final error {summary['relative_l2_error']:.6g}"
    if not summary.get("fracture"):
        return "no fracture"
    return (f"fracture initiated at s={summary['first_initiation_s']:.6g} m, "
            f"t={summary['first_initiation_time']:.6g} s")


def write_summary(path, summary: dict):
    lines = [f"result = {headline(summary)}"]
    lines += [f"{k} = {_fmt(v)}" for k, v in summary.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        key, _, val = line.partition(" = ")
        out[key] = val
    return out


@dataclass
class RunOutputs:
    out_dir: Path
    history: Path
    summary: Path
    snapshots: list = field(default_factory=list)
    result: RunResult | None = None


def run(config: ScenarioConfig, out_dir, snapshot_stride=None) -> RunOutputs:
    """Build, run and write one scenario. Snapshots stream to disk."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sc = build_scenario(config)
    default = sc.default_recorder()
    stride = default.snapshot_stride if snapshot_stride is None else snapshot_stride
    written = []

    def sink(snap):
        p = out_dir / f"snapshot_{snap.step}.csv"
        write_snapshot(p, snap)
        if config.vtk:
            write_vtk(p.with_suffix(".vtk"), snap)
        written.append(p)

    rec = Recorder(stride, default.history_stride, sink=sink)
    result = sc.run(rec)
    hist, summ = out_dir / "history.csv", out_dir / "summary.txt"
    write_history(hist, result.history)
    write_summary(summ, result.summary)
    return RunOutputs(out_dir, hist, summ, written, result)


CONVERGENCE_COLUMNS = ("h", "beta", "error", "observed_order")


def converge(config: ScenarioConfig, out_dir, levels=7, betas=(10.0, 100.0, 1000.0)) -> Path:
    rows = convergence_study(config, levels=levels, betas=betas)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "convergence.csv"
    write_convergence(path, rows)
    return path


def write_convergence(path, rows):
    write_table(path, CONVERGENCE_COLUMNS, [(r.h, r.beta, r.error, r.observed_order) for r in rows])
