"""Render experiment CSVs into figures.

Seven figure kinds cover the outputs of the jointsparse CLI:

* signal-overlay: truth, measurements, and estimates on the grid, one panel
  per signal (signals.csv).
* theta-profile: normalized hyper-parameter profiles, one panel per
  algorithm, one line per signal (thetas.csv).
* ci-ribbon: posterior mean with credible bands against the truth, panels
  by algorithm and signal (credible_intervals.csv).
* error-curve: error versus measurement budget, log scale, one line per
  algorithm group (success.csv or mri_errors.csv).
* esp-curve: empirical success probability versus measurement count
  (success.csv).
* phase-heatmap: success-probability grid over sparsity and measurements
  (phase_*.csv), one panel per input file.
* image-grid: grayscale image panels from headerless matrix CSVs.

Inputs are consumed strictly through the documented column contract; a
missing named column raises MissingColumn listing what was expected and
what was found. Rendering is read-only and deterministic: the same inputs
and styling produce byte-identical image files.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .errors import EmptyData, MissingColumn, UnknownKind

KINDS = (
    "signal-overlay",
    "theta-profile",
    "ci-ribbon",
    "error-curve",
    "esp-curve",
    "phase-heatmap",
    "image-grid",
)

_PALETTE = matplotlib.colormaps["tab10"].colors


@dataclass
class FigureSpec:
    """One rendering job: figure kind, input CSVs, output path, styling."""

    kind: str
    inputs: Sequence
    output: object
    style: dict = field(default_factory=dict)


def _read_table(path, required):
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise EmptyData(f"{path}: file holds no data")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise MissingColumn(path, missing, df.columns)
    if df.empty:
        raise EmptyData(f"{path}: no data rows under the header")
    return df


def _read_tables(paths, required):
    frames = [_read_table(p, required) for p in paths]
    return pd.concat(frames, ignore_index=True)


def _read_matrix(path):
    try:
        with warnings.catch_warnings():
            # emptiness is rejected explicitly below
            warnings.simplefilter("ignore", UserWarning)
            m = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise EmptyData(f"{path}: not a numeric matrix ({exc})")
    if m.size == 0:
        raise EmptyData(f"{path}: empty matrix")
    return m


def _colors(names):
    ordered = sorted(dict.fromkeys(names))
    return {n: _PALETTE[i % len(_PALETTE)] for i, n in enumerate(ordered)}


def _resolve(df, path, choices):
    for c in choices:
        if c in df.columns:
            return c
    raise MissingColumn(path, [" or ".join(choices)], df.columns)


def _panel_grid(n, max_cols=4):
    cols = min(n, max_cols)
    rows = int(np.ceil(n / cols))
    return rows, cols


def _signal_overlay(paths, style):
    df = _read_tables(paths, ["signal", "idx", "t", "truth", "measurement"])
    fixed = {"signal", "idx", "t", "truth", "measurement"}
    algs = [c for c in df.columns if c not in fixed]
    signals = sorted(df["signal"].unique())
    colors = _colors(algs)
    rows, cols = _panel_grid(len(signals))
    fig, axes = plt.subplots(
        rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False, sharey=True
    )
    for ax, l in zip(axes.ravel(), signals):
        part = df[df["signal"] == l].sort_values("idx")
        ax.plot(part["t"], part["truth"], color="black", lw=1.6, label="truth")
        ax.plot(part["t"], part["measurement"], ".", color="0.55", ms=3,
                label="measurement")
        for a in algs:
            ax.plot(part["t"], part[a], lw=1.1, color=colors[a], label=a)
        ax.set_title(f"signal {l}", fontsize=9)
        ax.set_xlabel("t")
    for ax in axes.ravel()[len(signals):]:
        ax.set_visible(False)
    axes[0][0].legend(fontsize=7)
    return fig


def _theta_profile(paths, style):
    df = _read_tables(paths, ["algorithm", "signal", "k", "theta_norm"])
    algs = sorted(df["algorithm"].unique())
    rows, cols = _panel_grid(len(algs))
    fig, axes = plt.subplots(
        rows, cols, figsize=(3.2 * cols, 2.4 * rows), squeeze=False,
        sharex=True, sharey=True,
    )
    for ax, a in zip(axes.ravel(), algs):
        part = df[df["algorithm"] == a]
        for l in sorted(part["signal"].unique()):
            prof = part[part["signal"] == l].sort_values("k")
            ax.plot(prof["k"], prof["theta_norm"], lw=1.0, label=f"signal {l}")
        ax.set_title(a, fontsize=9)
        ax.set_xlabel("component k")
        ax.set_ylabel("normalized scale")
    for ax in axes.ravel()[len(algs):]:
        ax.set_visible(False)
    axes[0][0].legend(fontsize=7)
    return fig


def _ci_ribbon(paths, style):
    df = _read_tables(
        paths, ["algorithm", "signal", "idx", "t", "truth", "lo", "mean", "hi"]
    )
    algs = sorted(df["algorithm"].unique())
    signals = sorted(df["signal"].unique())
    fig, axes = plt.subplots(
        len(algs), len(signals),
        figsize=(3.0 * len(signals), 2.4 * len(algs)),
        squeeze=False, sharex=True, sharey=True,
    )
    for i, a in enumerate(algs):
        for j, l in enumerate(signals):
            ax = axes[i][j]
            part = df[(df["algorithm"] == a) & (df["signal"] == l)].sort_values("idx")
            ax.fill_between(part["t"], part["lo"], part["hi"],
                            color="C0", alpha=0.30, lw=0, label="interval")
            ax.plot(part["t"], part["mean"], color="C0", lw=1.2, label="mean")
            ax.plot(part["t"], part["truth"], color="black", ls="--", lw=1.0,
                    label="truth")
            if i == 0:
                ax.set_title(f"signal {l}", fontsize=9)
            if j == 0:
                ax.set_ylabel(a, fontsize=9)
    axes[0][0].legend(fontsize=7)
    return fig


def _group_labels(df, x_col):
    """(label, frame) per algorithm, split further by L when present."""
    groups = []
    if "L" in df.columns and df["L"].nunique() > 1:
        for (a, L), part in df.groupby(["algorithm", "L"]):
            groups.append((f"{a} (L={L})", part.sort_values(x_col)))
    else:
        for a, part in df.groupby("algorithm"):
            groups.append((str(a), part.sort_values(x_col)))
    return sorted(groups, key=lambda g: g[0])


def _error_curve(paths, style):
    df = _read_tables(paths, ["algorithm"])
    x_col = _resolve(df, paths[0], ["M", "lines"])
    y_col = _resolve(df, paths[0], ["avg_error", "rel_error"])
    colors = _colors(df["algorithm"])
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    for label, part in _group_labels(df, x_col):
        alg = part["algorithm"].iloc[0]
        ax.semilogy(part[x_col], part[y_col], "o-", ms=3.5, lw=1.2,
                    color=colors[alg], label=label)
    ax.set_xlabel(x_col)
    ax.set_ylabel("relative error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    return fig


def _esp_curve(paths, style):
    df = _read_tables(paths, ["algorithm", "L", "M", "esp"])
    colors = _colors(df["algorithm"])
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    for label, part in _group_labels(df, "M"):
        alg = part["algorithm"].iloc[0]
        ax.plot(part["M"], part["esp"], "o-", ms=3.5, lw=1.2,
                color=colors[alg], label=label)
    ax.set_xlabel("M")
    ax.set_ylabel("empirical success probability")
    ax.set_ylim(-0.03, 1.03)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    return fig


def _phase_heatmap(paths, style):
    panels = []
    for p in paths:
        df = _read_table(p, [])
        if df.columns[0] != "s":
            raise MissingColumn(p, ["s"], df.columns)
        s_vals = df["s"].to_numpy()
        m_vals = np.array([float(c) for c in df.columns[1:]])
        grid = df.iloc[:, 1:].to_numpy(dtype=float)
        panels.append((Path(p).stem, s_vals, m_vals, grid))
    rows, cols = _panel_grid(len(panels), max_cols=3)
    fig, axes = plt.subplots(
        rows, cols, figsize=(4.0 * cols, 3.4 * rows), squeeze=False
    )
    cmap = style.get("cmap", "viridis")
    for ax, (name, s_vals, m_vals, grid) in zip(axes.ravel(), panels):
        im = ax.imshow(
            grid, origin="lower", aspect="auto", vmin=0.0, vmax=1.0, cmap=cmap,
            extent=(m_vals[0], m_vals[-1], s_vals[0], s_vals[-1]),
        )
        ax.set_xlabel("M")
        ax.set_ylabel("s")
        ax.set_title(name, fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.85)
    for ax in axes.ravel()[len(panels):]:
        ax.set_visible(False)
    return fig


def _image_grid(paths, style):
    images = [(Path(p).stem, _read_matrix(p)) for p in paths]
    rows, cols = _panel_grid(len(images))
    fig, axes = plt.subplots(
        rows, cols, figsize=(2.8 * cols, 2.8 * rows), squeeze=False
    )
    cmap = style.get("cmap", "gray")
    for ax, (name, img) in zip(axes.ravel(), images):
        ax.imshow(img, cmap=cmap, interpolation="nearest")
        ax.set_title(name, fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    for ax in axes.ravel()[len(images):]:
        ax.set_visible(False)
    return fig


_RENDERERS = {
    "signal-overlay": _signal_overlay,
    "theta-profile": _theta_profile,
    "ci-ribbon": _ci_ribbon,
    "error-curve": _error_curve,
    "esp-curve": _esp_curve,
    "phase-heatmap": _phase_heatmap,
    "image-grid": _image_grid,
}


def render_spec(spec: FigureSpec):
    """Render one FigureSpec to its output path. Returns the output path."""
    if spec.kind not in _RENDERERS:
        raise UnknownKind(
            f"unknown figure kind {spec.kind!r}; choose from {', '.join(KINDS)}"
        )
    paths = [Path(p) for p in spec.inputs]
    if not paths:
        raise EmptyData("no input CSVs given")
    fig = _RENDERERS[spec.kind](paths, spec.style)
    title = spec.style.get("title")
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.style.get("dpi", 110))
    plt.close(fig)
    return out


def render(kind, inputs, output, **style):
    """Convenience wrapper: render(kind, input paths, output path, **style)."""
    return render_spec(FigureSpec(kind=kind, inputs=inputs, output=output,
                                  style=style))
