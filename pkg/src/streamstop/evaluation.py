"""Policy evaluation: episodes, losses, performance profiles, Pareto fronts, capped budgets."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .combination import DEFAULT_COMBINER, Accumulator, CombinerConfig
from .core import AlternativesMatrix, ClipStream, from_plain_string
from .metrics import DEFAULT_METRIC, MetricConfig, rho
from .stopping import (
    ClusterPolicy,
    ClusterPolicyParams,
    DeltaPolicy,
    DeltaPolicyParams,
    FixedCountPolicy,
    StageView,
)

FAMILIES = ("ndelta", "ncx", "ncr", "nk")
DEFAULT_CAPS = (3, 4, 5, 6, 7, 8, 9, 10)
STAGE_TOL = 1e-9


def default_cost_grid() -> List[float]:
    return [0.0] + [float(f"{c:.6g}") for c in np.geomspace(0.001, 0.5, 60)]


def default_grids(horizon: int = 30) -> Dict[str, Dict[str, list]]:
    clustering = {
        "size": list(range(1, 11)),
        "confidence": [0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
        "gap": [0.0, 0.05, 0.1, 0.2],
    }
    return {
        "ndelta": {"c": default_cost_grid(), "delta": [0.0, 0.05, 0.1, 0.2, 0.4, 0.8], "min_stage": [1]},
        "ncx": dict(clustering),
        "ncr": dict(clustering),
        "nk": {"k": list(range(1, horizon + 1))},
    }


def expand_grid(axes: Mapping[str, Sequence]) -> List[dict]:
    """Cartesian product of parameter axes, last axis varying fastest."""
    names = list(axes)
    return [dict(zip(names, values)) for values in itertools.product(*(axes[n] for n in names))]


def make_policy(family: str, params: Mapping):
    if family == "ndelta":
        return DeltaPolicy(DeltaPolicyParams(float(params["c"]), float(params.get("delta", 0.1)),
                                             int(params.get("min_stage", 1))))
    if family in ("ncx", "ncr"):
        cp = ClusterPolicyParams(int(params["size"]), float(params["confidence"]), float(params["gap"]))
        return ClusterPolicy(cp, "frames" if family == "ncx" else "integrated")
    if family == "nk":
        return FixedCountPolicy(int(params["k"]))
    raise ValueError(f"unknown policy family {family!r}")


class ClipReplay:
    """One clip pushed through the combiner once, shared by every policy evaluated on it.

    Policies see :class:`StageView` objects, never ``distances``.
    """

    def __init__(self, clip: ClipStream, metric: MetricConfig = DEFAULT_METRIC,
                 combiner: CombinerConfig = DEFAULT_COMBINER):
        self.clip = clip
        self.metric = metric
        truth = from_plain_string(clip.ground_truth)
        acc = Accumulator(combiner)
        integrated, accs = [], []
        for x in clip.frames:
            acc.push(x)
            integrated.append(acc.integrated())
            accs.append(acc.copy())
        self.integrated = tuple(integrated)
        self.distances = tuple(rho(r, truth, metric) for r in integrated)
        memo: dict = {}
        self.views = tuple(
            StageView(n, clip.frames[:n], self.integrated[:n], accs[n - 1], memo, metric)
            for n in range(1, len(clip.frames) + 1)
        )

    @property
    def horizon(self) -> int:
        return len(self.views)


@dataclass
class StageRecord:
    stage: int
    integrated: AlternativesMatrix
    distance: float
    statistic: Optional[float]


@dataclass
class EpisodeTrace:
    clip_id: str
    stages: List[StageRecord]
    stopping_stage: int
    final_distance: float

    def loss(self, c: float) -> float:
        return self.final_distance + c * self.stopping_stage


def run_episode(clip, policy, metric: MetricConfig = DEFAULT_METRIC,
                combiner: CombinerConfig = DEFAULT_COMBINER,
                replay: Optional[ClipReplay] = None) -> EpisodeTrace:
    """Push frames in order, ask the policy after each push, stop at its first Stop or at the last frame."""
    replay = replay or ClipReplay(clip, metric, combiner)
    records = []
    for view in replay.views:
        decision = policy.decide(view)
        n = view.stage
        records.append(StageRecord(n, replay.integrated[n - 1], replay.distances[n - 1], decision.statistic))
        if decision.stop:
            break
    n = records[-1].stage
    return EpisodeTrace(replay.clip.clip_id, records, n, replay.distances[n - 1])


def stopping_stage(replay: ClipReplay, policy) -> int:
    for view in replay.views:
        if policy.decide(view).stop:
            return view.stage
    return replay.horizon


def expected_loss(traces: Sequence[EpisodeTrace], c: float) -> float:
    if not traces:
        raise ValueError("expected_loss needs at least one trace")
    return math.fsum(t.final_distance + c * t.stopping_stage for t in traces) / len(traces)


@dataclass
class ProfilePoint:
    mean_stage: float
    mean_distance: float
    policy_config: dict = field(default_factory=dict)
    family: str = ""
    config_id: int = 0

    def key(self):
        return (self.mean_stage, self.mean_distance)


@dataclass
class FamilyResult:
    """Per-configuration stopping stages and final distances, clips in dataset order."""

    family: str
    configs: List[dict]
    stages: np.ndarray
    distances: np.ndarray
    clip_ids: List[str]

    def points(self) -> List[ProfilePoint]:
        pts = [ProfilePoint(float(np.mean(self.stages[g])), float(np.mean(self.distances[g])),
                            dict(cfg), self.family, g)
               for g, cfg in enumerate(self.configs)]
        # stable sort keeps grid order among equal stages
        return sorted(pts, key=lambda p: p.mean_stage)


def _evaluate_chunk(args):
    clips, families, metric, combiner = args
    out = {name: ([], []) for name in families}
    for clip in clips:
        replay = ClipReplay(clip, metric, combiner)
        for name, configs in families.items():
            stages, dists = out[name]
            row_s, row_d = [], []
            for cfg in configs:
                n = stopping_stage(replay, make_policy(name, cfg))
                row_s.append(n)
                row_d.append(replay.distances[n - 1])
            stages.append(row_s)
            dists.append(row_d)
    return out


def evaluate_families(clips: Sequence[ClipStream], families: Mapping[str, Sequence[dict]],
                      metric: MetricConfig = DEFAULT_METRIC, jobs: Optional[int] = None,
                      combiner: CombinerConfig = DEFAULT_COMBINER,
                      chunk_size: int = 10) -> Dict[str, FamilyResult]:
    """Run every configuration of every family over every clip.

    ``families`` maps a family name to its list of parameter dicts.  Work is
    split into chunks of clips; results are reassembled in clip order, so the
    output does not depend on ``jobs``.
    """
    clips = list(clips)
    families = {name: [dict(c) for c in cfgs] for name, cfgs in families.items()}
    chunks = [(clips[i:i + chunk_size], families, metric, combiner) for i in range(0, len(clips), chunk_size)]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_evaluate_chunk, chunks))
    else:
        parts = [_evaluate_chunk(ch) for ch in chunks]
    results = {}
    for name, configs in families.items():
        stages = np.array([row for part in parts for row in part[name][0]], dtype=float).reshape(len(clips), -1)
        dists = np.array([row for part in parts for row in part[name][1]], dtype=float).reshape(len(clips), -1)
        results[name] = FamilyResult(name, configs, stages.T, dists.T, [c.clip_id for c in clips])
    return results


def performance_profile(dataset: Sequence[ClipStream], policy_family: str, parameter_grid,
                        metric: MetricConfig = DEFAULT_METRIC, jobs: Optional[int] = 1,
                        combiner: CombinerConfig = DEFAULT_COMBINER) -> List[ProfilePoint]:
    """One point per grid cell, sorted by mean stage.

    ``parameter_grid`` is a list of parameter dicts or a mapping of axes to values.
    """
    grid = expand_grid(parameter_grid) if isinstance(parameter_grid, Mapping) else list(parameter_grid)
    if not grid:
        raise ValueError("parameter grid is empty")
    result = evaluate_families(dataset, {policy_family: grid}, metric, jobs, combiner)[policy_family]
    return result.points()


def dominates(a: ProfilePoint, b: ProfilePoint) -> bool:
    return (a.mean_stage <= b.mean_stage and a.mean_distance <= b.mean_distance
            and (a.mean_stage < b.mean_stage or a.mean_distance < b.mean_distance))


def pareto_front(points: Sequence[ProfilePoint]) -> List[ProfilePoint]:
    """Points not dominated in (mean_stage, mean_distance), sorted by mean stage; duplicates kept once."""
    if not points:
        raise ValueError("pareto_front needs at least one point")
    ordered = sorted(points, key=lambda p: (p.mean_stage, p.mean_distance))
    front: List[ProfilePoint] = []
    best = math.inf
    for p in ordered:
        if p.mean_distance < best:
            front.append(p)
            best = p.mean_distance
    return front


@dataclass
class BudgetCell:
    policy: str
    cap: float
    mean_distance: Optional[float]
    point: Optional[ProfilePoint]


@dataclass
class BudgetTable:
    caps: List[float]
    rows: Dict[str, List[BudgetCell]]

    def value(self, policy: str, cap) -> Optional[float]:
        for cell in self.rows[policy]:
            if cell.cap == cap:
                return cell.mean_distance
        raise KeyError(cap)

    def cells(self):
        for policy, row in self.rows.items():
            yield from row


def capped_budget_table(profiles: Mapping[str, Sequence[ProfilePoint]], caps: Sequence[float]) -> BudgetTable:
    """Best mean distance of each policy among its points using at most ``cap`` observations on average."""
    caps = list(caps)
    if caps != sorted(caps):
        raise ValueError("caps must be sorted ascending")
    rows = {}
    for policy, points in profiles.items():
        row = []
        for cap in caps:
            eligible = [p for p in points if p.mean_stage <= cap + STAGE_TOL]
            best = min(eligible, key=lambda p: (p.mean_distance, p.mean_stage), default=None)
            row.append(BudgetCell(policy, cap, None if best is None else best.mean_distance, best))
        rows[policy] = row
    return BudgetTable(caps, rows)


def ordering_checks(table: BudgetTable, fronts: Mapping[str, Sequence[ProfilePoint]],
                    reference: str = "ndelta", baseline: str = "nk") -> List[tuple]:
    """Compare the reference policy with the baseline and with each clustering front, cap by cap.

    Returns ``(name, passed, detail)`` triples.  The reference must be at
    least as accurate as the baseline at every cap, and the point that
    realizes its capped value must not be dominated by any front point.
    """
    checks = []
    for cell in table.rows[reference]:
        base = table.value(baseline, cell.cap)
        ok = cell.mean_distance is not None and (base is None or cell.mean_distance <= base)
        checks.append((f"{reference}<={baseline} cap<={cell.cap:g}", ok,
                       f"{_fmt(cell.mean_distance)} vs {_fmt(base)}"))
    for name, front in fronts.items():
        for cell in table.rows[reference]:
            p = cell.point
            beaten = [q for q in front if p is not None and dominates(q, p)]
            ok = p is not None and not beaten
            detail = "no point" if p is None else (
                f"({p.mean_stage:.3f}, {p.mean_distance:.4f})"
                + (f" dominated by ({beaten[0].mean_stage:.3f}, {beaten[0].mean_distance:.4f})" if beaten else ""))
            checks.append((f"{reference} undominated by {name} front cap<={cell.cap:g}", ok, detail))
    return checks


def _fmt(v):
    return "-" if v is None else f"{v:.4f}"
