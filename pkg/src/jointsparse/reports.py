"""Serialization of experiment reports to a run directory.

Layout per run: one CSV per table (header row, repr-formatted floats so the
bytes round-trip and stay identical across invocations), one CSV per matrix
(row-major, no header), one CSV per success-probability grid (first column is
the sparsity axis, remaining column names are the measurement counts), plus a
manifest.json echoing configuration, seed, and code version. Nothing here
writes timestamps, so fixed-seed runs are byte-for-byte reproducible.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ExperimentReport
from .operators import save_matrix_csv


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_grid_csv(path, row_values, col_values, grid):
    """ESP grid with the sparsity axis down the rows, measurements across."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s"] + [str(int(m)) for m in col_values])
        for s, row in zip(row_values, np.asarray(grid)):
            writer.writerow([str(int(s))] + [repr(float(v)) for v in row])


def write_report(report: ExperimentReport, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, (columns, rows) in report.tables.items():
        write_table_csv(outdir / f"{name}.csv", columns, rows)
    for name, matrix in report.matrices.items():
        save_matrix_csv(outdir / f"{name}.csv", matrix)
    for name, (row_vals, col_vals, grid) in report.grids.items():
        write_grid_csv(outdir / f"{name}.csv", row_vals, col_vals, grid)
    manifest = {
        "kind": report.kind,
        "version": __version__,
        "config": report.config,
        "files": sorted(
            [f"{n}.csv" for n in report.tables]
            + [f"{n}.csv" for n in report.matrices]
            + [f"{n}.csv" for n in report.grids]
        ),
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return outdir
