"""Distances between recognition results.

Character rows are compared with the taxicab (L1) metric halved to [0, 1];
strings with the generalized Levenshtein distance (GLD) built on it, where
inserting or deleting a row costs its distance to the one-hot empty symbol.
``rho`` is the Yujian-Bo normalization of GLD:

    rho(x, y) = 2 * GLD(x, y) / (alpha * (|x| + |y|) + GLD(x, y))

Here ``|x|`` is the non-empty mass of ``x`` (the summed gap cost of its
rows).  For plain strings that is the ordinary length; for rows carrying
empty-symbol mass it keeps rho a metric, which counting rows does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EPSILON, AlternativesMatrix, CharDistribution


@dataclass(frozen=True)
class MetricConfig:
    """``alpha`` must bound the largest single-row cost, which is 1 here."""

    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1 (max character cost), got {self.alpha}")


DEFAULT_METRIC = MetricConfig()


def char_distance(u: CharDistribution, v: CharDistribution) -> float:
    wu, wv = u.weights, v.weights
    total = 0.0
    for label, w in wu.items():
        total += abs(w - wv.get(label, 0.0))
    for label, w in wv.items():
        if label not in wu:
            total += w
    return 0.5 * total


def gap_cost(u: CharDistribution) -> float:
    """Cost of inserting or deleting ``u``: its distance to the one-hot empty symbol."""
    return max(0.0, 1.0 - u.weights.get(EPSILON, 0.0))


def _dense(rows, index) -> np.ndarray:
    out = np.zeros((len(rows), len(index)))
    for i, row in enumerate(rows):
        for label, w in row.entries:
            out[i, index[label]] = w
    return out


def cost_tables(xs, ys):
    """Substitution matrix and per-row gap costs for aligning ``xs`` against ``ys``.

    Returns ``(sub, gap_x, gap_y)`` as nested lists of floats.
    """
    labels = {}
    for row in xs:
        for label, _ in row.entries:
            labels.setdefault(label, len(labels))
    for row in ys:
        for label, _ in row.entries:
            labels.setdefault(label, len(labels))
    a = _dense(xs, labels)
    b = _dense(ys, labels)
    if len(xs) and len(ys):
        sub = 0.5 * np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
        sub = sub.tolist()
    else:
        sub = [[] for _ in xs]
    eps = labels.get(EPSILON)
    if eps is None:
        gap_x = [1.0] * len(xs)
        gap_y = [1.0] * len(ys)
    else:
        gap_x = np.maximum(0.0, 1.0 - a[:, eps]).tolist()
        gap_y = np.maximum(0.0, 1.0 - b[:, eps]).tolist()
    return sub, gap_x, gap_y


def gld(x: AlternativesMatrix, y: AlternativesMatrix) -> float:
    """Generalized Levenshtein distance, two-row dynamic program."""
    xs, ys = x.positions, y.positions
    if not xs:
        return float(sum(gap_cost(v) for v in ys))
    if not ys:
        return float(sum(gap_cost(u) for u in xs))
    sub, gap_x, gap_y = cost_tables(xs, ys)
    prev = [0.0]
    for g in gap_y:
        prev.append(prev[-1] + g)
    for i, gx in enumerate(gap_x):
        row_sub = sub[i]
        cur = [prev[0] + gx]
        for j, gy in enumerate(gap_y):
            best = prev[j] + row_sub[j]
            ins = cur[j] + gy
            if ins < best:
                best = ins
            dele = prev[j + 1] + gx
            if dele < best:
                best = dele
            cur.append(best)
        prev = cur
    return prev[-1]


def mass(x: AlternativesMatrix) -> float:
    return float(sum(gap_cost(u) for u in x.positions))


#: GLD below this is rounding noise from re-normalized rows
ZERO_TOL = 1e-12


def rho(x: AlternativesMatrix, y: AlternativesMatrix, cfg: MetricConfig = DEFAULT_METRIC) -> float:
    d = gld(x, y)
    if d <= ZERO_TOL:
        return 0.0
    return min(1.0, 2.0 * d / (cfg.alpha * (mass(x) + mass(y)) + d))
