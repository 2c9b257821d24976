"""Render rate curves and phase-diagram heatmaps from sweep CSV files.

Input is the sweep results CSV (documented column order:
n,K,a,b,beta,space,estimator,penalty,w,replicate,seed,r_num,r_den,r,
nI_over_K,nI_over_betaK,runtime_ms,status).  Only the columns listed in
REQUIRED_COLUMNS are read; extra columns are ignored.

Outputs, written into the target directory (idempotent):

  rate_curve.png / .svg     log mean mis-match ratio against n*I/K with
                            the y = -x reference line and the fitted slope
  phase_heatmap.png / .svg  mean mis-match ratio over the (a, b) grid

Points whose empirical risk is exactly zero cannot be log-plotted; they
are drawn as censored markers at the resolution floor
log(1 / (replicates * n)).
"""

from __future__ import annotations

import csv
import math
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "REQUIRED_COLUMNS",
    "SchemaError",
    "NoDataError",
    "load_points",
    "fitted_slope",
    "render",
    "main",
]

REQUIRED_COLUMNS = ["n", "K", "a", "b", "r", "nI_over_K", "status"]


class SchemaError(ValueError):
    """CSV does not carry the documented columns."""


class NoDataError(ValueError):
    """CSV has no usable data rows."""


@dataclass(frozen=True)
class PointStats:
    n: int
    k: int
    a: float
    b: float
    x: float          # n * I / K
    mean_r: float
    replicates: int

    @property
    def censored(self) -> bool:
        return self.mean_r == 0.0

    @property
    def log_mean_r(self) -> float:
        if self.censored:
            return math.log(1.0 / (self.replicates * self.n))  # resolution floor
        return math.log(self.mean_r)


def load_points(csv_path: str | Path) -> list[PointStats]:
    """Aggregate ok-status rows into per-point mean mis-match ratios."""
    with open(csv_path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise SchemaError(f"schema mismatch: missing column {column!r}")
        groups: dict[tuple, list[float]] = defaultdict(list)
        meta: dict[tuple, tuple] = {}
        for row in reader:
            if row["status"] != "ok":
                continue
            key = (row["n"], row["K"], row["a"], row["b"])
            groups[key].append(float(row["r"]))
            meta[key] = (int(row["n"]), int(row["K"]), float(row["a"]),
                         float(row["b"]), float(row["nI_over_K"]))
    if not groups:
        raise NoDataError("no data")
    points = []
    for key, rs in groups.items():
        n, k, a, b, x = meta[key]
        points.append(
            PointStats(n=n, k=k, a=a, b=b, x=x,
                       mean_r=sum(rs) / len(rs), replicates=len(rs))
        )
    points.sort(key=lambda p: (p.x, p.a, p.b))
    return points


def fitted_slope(points: list[PointStats]) -> float:
    """Least-squares slope of log mean r against n*I/K (censored points excluded)."""
    usable = [p for p in points if not p.censored]
    if len(usable) < 2:
        raise NoDataError("need at least two uncensored points to fit a slope")
    xs = np.array([p.x for p in usable])
    ys = np.array([p.log_mean_r for p in usable])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def _render_rate_curve(points: list[PointStats], out_dir: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    clear = [p for p in points if not p.censored]
    censored = [p for p in points if p.censored]
    if clear:
        ax.plot([p.x for p in clear], [p.log_mean_r for p in clear],
                "o-", color="tab:blue", label="log mean r")
    if censored:
        ax.plot([p.x for p in censored], [p.log_mean_r for p in censored],
                "v", color="tab:gray",
                label="censored (zero risk, plotted at resolution floor)")
    xs = np.array([p.x for p in points])
    ref = np.linspace(xs.min(), xs.max(), 50)
    ax.plot(ref, -ref, "--", color="tab:red", label="slope -1 reference")
    try:
        slope = fitted_slope(points)
        ax.set_title(f"rate curve (fitted slope {slope:.3f})")
    except NoDataError:
        ax.set_title("rate curve")
    ax.set_xlabel("n I / K")
    ax.set_ylabel("log mean mis-match ratio")
    ax.legend(fontsize=8)
    fig.tight_layout()
    outputs = []
    for ext in ("png", "svg"):
        path = out_dir / f"rate_curve.{ext}"
        fig.savefig(path)
        outputs.append(path)
    plt.close(fig)
    return outputs


def _render_phase_heatmap(points: list[PointStats], out_dir: Path) -> list[Path]:
    a_values = sorted({p.a for p in points})
    b_values = sorted({p.b for p in points})
    grid = np.full((len(b_values), len(a_values)), np.nan)
    for p in points:
        grid[b_values.index(p.b), a_values.index(p.a)] = p.mean_r
    fig, ax = plt.subplots(figsize=(6, 4.5))
    image = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(a_values)), [f"{v:g}" for v in a_values])
    ax.set_yticks(range(len(b_values)), [f"{v:g}" for v in b_values])
    ax.set_xlabel("a (within-rate numerator)")
    ax.set_ylabel("b (between-rate numerator)")
    ax.set_title("mean mis-match ratio")
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    outputs = []
    for ext in ("png", "svg"):
        path = out_dir / f"phase_heatmap.{ext}"
        fig.savefig(path)
        outputs.append(path)
    plt.close(fig)
    return outputs


def render(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Render both figures; returns the paths written."""
    points = load_points(csv_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _render_rate_curve(points, out) + _render_phase_heatmap(points, out)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: render <csv> <out_dir>", file=sys.stderr)
        return 2
    try:
        written = render(argv[0], argv[1])
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except NoDataError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
