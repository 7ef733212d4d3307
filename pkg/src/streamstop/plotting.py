"""SVG rendering of performance profiles."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MARGIN = 0.05
LABELS = {"ndelta": "N_delta", "ncx": "N_CX (front)", "ncr": "N_CR (front)", "nk": "N_K"}
STYLES = {"ndelta": "-", "ncx": "--", "ncr": "-.", "nk": ":"}
# fixed hash salt and text-as-text keep the SVG free of per-run ids
SVG_RC = {"svg.hashsalt": "streamstop", "svg.fonttype": "none"}

Series = Dict[str, List[Tuple[float, float]]]


class PlotError(ValueError):
    pass


def read_series(path, policy_column: str = "policy") -> Series:
    """Read (mean_stage, mean_distance) pairs grouped by policy from a profile or Pareto CSV."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{path}: no data rows")
    missing = {policy_column, "mean_stage", "mean_distance"} - set(rows[0])
    if missing:
        raise PlotError(f"{path}: missing columns {sorted(missing)}")
    series: Series = {}
    for i, row in enumerate(rows, start=2):
        try:
            pt = (float(row["mean_stage"]), float(row["mean_distance"]))
        except ValueError:
            raise PlotError(f"{path}:{i}: non-numeric stage or distance") from None
        series.setdefault(row[policy_column], []).append(pt)
    return series


def lower_envelope(points: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out, best = [], float("inf")
    for x, y in sorted(points):
        if y < best:
            out.append((x, y))
            best = y
    return out


def axis_limits(points: Sequence[Tuple[float, float]]) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Bounding box widened by 5% of its span on each side; a zero span is padded by 5% of the value (or of 1)."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]

    def pad(lo, hi):
        span = hi - lo
        m = MARGIN * span if span > 0 else MARGIN * max(abs(lo), 1.0)
        return lo - m, hi + m

    return pad(min(xs), max(xs)), pad(min(ys), max(ys))


def build_figure(series: Mapping[str, Sequence[Tuple[float, float]]],
                 title: str = "Expected performance profiles"):
    """One line per policy; N_delta and the clustering rules are drawn as their lower envelopes.

    Single-point series are drawn as markers.
    """
    if not series or not any(series.values()):
        raise PlotError("nothing to plot")
    order = sorted(series, key=lambda n: (list(LABELS).index(n) if n in LABELS else len(LABELS), n))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in order:
        pts = sorted(series[name]) if name == "nk" else lower_envelope(series[name])
        if not pts:
            continue
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        kw = {"label": LABELS.get(name, name)}
        if len(pts) == 1:
            ax.plot(xs, ys, linestyle="none", marker="o", **kw)
        else:
            ax.plot(xs, ys, linestyle=STYLES.get(name, "-"), marker=".", markersize=3, **kw)
    (x0, x1), (y0, y1) = axis_limits([p for pts in series.values() for p in pts])
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_xlabel("mean number of observations")
    ax.set_ylabel("mean distance to ground truth")
    ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render_profiles(series: Mapping[str, Sequence[Tuple[float, float]]], path,
                    title: str = "Expected performance profiles") -> Path:
    """Write the profile plot as SVG; byte-stable for equal input."""
    path = Path(path)
    with plt.rc_context(SVG_RC):
        fig = build_figure(series, title)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
