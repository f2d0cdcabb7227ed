#!/usr/bin/env python3
"""Render the sweep CSV bundles into figure images.

Three figures are supported:
  fig1 -- per-run welfare scatter (left) and empirical CDF (right), one
          series per algorithm, from columns algo,run,welfare
  fig3 -- worst-case ratio vs inventory, one curve per tail level, from
          columns k,delta_cap,delta_risk,L,U,alpha,grid_size
  fig4 -- worst-case ratio vs allowed price changes, same schema, x is
          delta_cap

Rendering is a pure function of the CSV contents; the written image embeds
the CSV's SHA-256 so each figure can be traced back to its data.

Usage: render_figures.py --fig {1|3|4} --csv <path> --out <path>
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

AXIS_LABELS = {
    "1": (("run", "welfare"), ("welfare", "empirical CDF")),
    "3": ("inventory k", "worst-case ratio"),
    "4": ("allowed price changes", "worst-case ratio"),
}


@dataclass(frozen=True)
class FigureSpec:
    figure: str                     # "1", "3" or "4"
    csv_path: str
    out_path: str
    axis_labels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.figure not in ("1", "3", "4"):
            raise ValueError(f"unknown figure id: {self.figure!r}")
        if not self.axis_labels:
            object.__setattr__(self, "axis_labels", AXIS_LABELS[self.figure])


class MissingColumn(ValueError):
    def __init__(self, name: str):
        super().__init__(f"CSV is missing required column: {name}")
        self.column = name


def read_rows(path: str, required: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise MissingColumn(col)
        rows = list(reader)
    if not rows:
        raise ValueError("CSV has no data rows")
    return rows


def _sweep_series(rows: list[dict], x_col: str) -> dict[float, tuple[list, list]]:
    """Group (x, alpha) points by tail level, sorted by x, dropping rows whose
    alpha did not solve (recorded as nan by the sweep)."""
    series: dict[float, tuple[list, list]] = {}
    for row in rows:
        alpha = float(row["alpha"])
        if alpha != alpha:  # nan: a failed sweep row
            continue
        d = float(row["delta_risk"])
        xs, ys = series.setdefault(d, ([], []))
        xs.append(float(row[x_col]))
        ys.append(alpha)
    for d, (xs, ys) in series.items():
        order = sorted(range(len(xs)), key=xs.__getitem__)
        series[d] = ([xs[i] for i in order], [ys[i] for i in order])
    return series


def build_figure(spec: FigureSpec) -> plt.Figure:
    """Build the matplotlib figure (no file output); the plot data layer is
    inspectable on the returned object."""
    if spec.figure == "1":
        rows = read_rows(spec.csv_path, ["algo", "run", "welfare"])
        by_algo: dict[str, tuple[list, list]] = {}
        for row in rows:
            runs, welfare = by_algo.setdefault(row["algo"], ([], []))
            runs.append(int(row["run"]))
            welfare.append(float(row["welfare"]))
        fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
        (lx, ly), (rx, ry) = spec.axis_labels
        for algo in sorted(by_algo):
            runs, welfare = by_algo[algo]
            left.plot(runs, welfare, ".", markersize=2, label=algo)
            w = sorted(welfare)
            cdf = [(i + 1) / len(w) for i in range(len(w))]
            right.plot(w, cdf, drawstyle="steps-post", label=algo)
        left.set_xlabel(lx), left.set_ylabel(ly)
        right.set_xlabel(rx), right.set_ylabel(ry)
        right.legend()
        fig.tight_layout()
        return fig

    x_col = "k" if spec.figure == "3" else "delta_cap"
    rows = read_rows(spec.csv_path,
                     ["k", "delta_cap", "delta_risk", "L", "U", "alpha", "grid_size"])
    series = _sweep_series(rows, x_col)
    if not series:
        raise ValueError("CSV has no solved rows to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    for d in sorted(series):
        xs, ys = series[d]
        ax.plot(xs, ys, marker=".", markersize=3, label=f"tail {d:g}")
    xl, yl = spec.axis_labels
    ax.set_xlabel(xl), ax.set_ylabel(yl)
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out_path; the PNG metadata records the
    SHA-256 of the CSV it was generated from. Returns the output path."""
    fig = build_figure(spec)  # raises before any file is written
    digest = hashlib.sha256(Path(spec.csv_path).read_bytes()).hexdigest()
    fig.savefig(spec.out_path, dpi=150, metadata={"csv-sha256": digest})
    plt.close(fig)
    return spec.out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fig", required=True, choices=["1", "3", "4"])
    parser.add_argument("--csv", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        path = render(FigureSpec(figure=args.fig, csv_path=args.csv, out_path=args.out))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
