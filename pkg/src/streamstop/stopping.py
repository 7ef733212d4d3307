"""Stopping policies.

* N_Δ  -- models the next integrated result with every past observation and
  stops once the estimated distance to it drops to the observation cost.
* N_CX -- clusters the per-frame results by length and thresholds the
  largest cluster's size, confidence and lead over the runner-up.
* N_CR -- the same rule applied to the integrated results R_1..R_n.
* N_K  -- stops after the K-th frame.

The policy classes at the bottom share one calling convention,
``policy.decide(view)``, where ``view`` is a :class:`StageView` (what has
been observed up to stage n, never the ground truth).  Expensive per-stage
quantities are memoized on the view so a whole parameter grid can be
replayed over one clip cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .combination import Accumulator
from .core import AlternativesMatrix, StoppingDecision, Verdict
from .metrics import DEFAULT_METRIC, MetricConfig, rho

STOP = StoppingDecision(Verdict.STOP)
CONTINUE = StoppingDecision(Verdict.CONTINUE)


@dataclass(frozen=True)
class DeltaPolicyParams:
    cost: float = 0.0
    delta: float = 0.1
    min_stage: int = 1

    def __post_init__(self):
        if self.cost < 0 or self.delta < 0:
            raise ValueError("cost and delta must be nonnegative")
        if self.min_stage < 1:
            raise ValueError("min_stage must be >= 1")


@dataclass(frozen=True)
class ClusterPolicyParams:
    min_cluster_size: int = 1
    min_confidence: float = 0.0
    min_confidence_gap: float = 0.0

    def __post_init__(self):
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")
        for name in ("min_confidence", "min_confidence_gap"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class ClusterSummary:
    length: int
    members: tuple
    confidence: float

    @property
    def size(self) -> int:
        return len(self.members)


# next-result modelling


def modeled_distance_sum(acc: Accumulator, history: Sequence[AlternativesMatrix],
                         cfg: MetricConfig = DEFAULT_METRIC) -> float:
    """Sum over i of rho(R_n, R(x_1..x_n, x_i)); the delta-free part of delta_hat."""
    if not history:
        raise ValueError("delta_hat needs at least one observation")
    if acc.n_observations != len(history):
        raise ValueError(f"accumulator holds {acc.n_observations} observations, history {len(history)}")
    current = acc.integrated()
    return math.fsum(rho(current, acc.combine_with(x), cfg) for x in history)


def delta_hat(acc: Accumulator, history: Sequence[AlternativesMatrix], delta: float,
              cfg: MetricConfig = DEFAULT_METRIC) -> float:
    n = len(history)
    return (delta + modeled_distance_sum(acc, history, cfg)) / (n + 1)


def decide_delta(params: DeltaPolicyParams, stage: int, distance_sum: float) -> StoppingDecision:
    stat = (params.delta + distance_sum) / (stage + 1)
    stop = stage >= params.min_stage and stat <= params.cost
    return StoppingDecision(Verdict.STOP if stop else Verdict.CONTINUE, stat)


def policy_n_delta(params: DeltaPolicyParams, acc: Accumulator, history: Sequence[AlternativesMatrix],
                   cfg: MetricConfig = DEFAULT_METRIC) -> StoppingDecision:
    return decide_delta(params, len(history), modeled_distance_sum(acc, history, cfg))


# clustering rules


def weakest_top_weight(x: AlternativesMatrix) -> float:
    """min over the string's characters of the row's top weight (0 for an empty string)."""
    tops = [row.top_weight for row in x.positions if row.top_label]
    return min(tops) if tops else 0.0


def cluster_confidence(members: Sequence[AlternativesMatrix]) -> float:
    """Q(C) = 1 - prod over members of (1 - weakest top weight)."""
    if not members or len(members[0].text) == 0:
        return 0.0
    prod = 1.0
    for x in members:
        prod *= 1.0 - weakest_top_weight(x)
    return min(1.0, max(0.0, 1.0 - prod))


def cluster_by_length(items: Sequence[AlternativesMatrix]) -> List[ClusterSummary]:
    """Clusters ordered largest first: by size, then confidence, then shorter length."""
    groups: Dict[int, list] = {}
    for x in items:
        groups.setdefault(len(x.text), []).append(x)
    summaries = [ClusterSummary(length, tuple(members), cluster_confidence(members))
                 for length, members in groups.items()]
    summaries.sort(key=lambda c: (-c.size, -c.confidence, c.length))
    return summaries


def decide_cluster(params: ClusterPolicyParams, clusters: Sequence[ClusterSummary]) -> StoppingDecision:
    top = clusters[0]
    stop = top.size >= params.min_cluster_size and top.confidence >= params.min_confidence
    if stop and len(clusters) > 1:
        stop = top.confidence - clusters[1].confidence >= params.min_confidence_gap
    return StoppingDecision(Verdict.STOP if stop else Verdict.CONTINUE, top.confidence)


def policy_n_cluster(params: ClusterPolicyParams, items: Sequence[AlternativesMatrix]) -> StoppingDecision:
    if not items:
        raise ValueError("clustering rule needs at least one item")
    return decide_cluster(params, cluster_by_length(items))


def policy_n_k(k: int, stage: int) -> StoppingDecision:
    if stage < 1:
        raise ValueError("stage must be >= 1")
    return STOP if stage >= k else CONTINUE


# policy objects used by the evaluation harness


class StageView:
    """Everything a policy may look at after the n-th push of one clip."""

    __slots__ = ("stage", "frames", "integrated", "accumulator", "memo", "metric")

    def __init__(self, stage, frames, integrated, accumulator, memo, metric):
        self.stage = stage
        self.frames = frames
        self.integrated = integrated
        self.accumulator = accumulator
        self.memo = memo
        self.metric = metric

    def cached(self, key, compute):
        full = (key, self.stage)
        try:
            return self.memo[full]
        except KeyError:
            value = self.memo[full] = compute()
            return value


class DeltaPolicy:
    family = "ndelta"

    def __init__(self, params: DeltaPolicyParams):
        self.params = params

    def decide(self, view: StageView) -> StoppingDecision:
        s = view.cached("delta_sum", lambda: modeled_distance_sum(
            view.accumulator, view.frames[:view.stage], view.metric))
        return decide_delta(self.params, view.stage, s)

    def config(self) -> dict:
        return {"c": self.params.cost, "delta": self.params.delta, "min_stage": self.params.min_stage}


class ClusterPolicy:
    """N_CX over per-frame results (``source="frames"``) or N_CR over integrated ones."""

    def __init__(self, params: ClusterPolicyParams, source: str = "frames"):
        if source not in ("frames", "integrated"):
            raise ValueError(f"unknown cluster source {source!r}")
        self.params = params
        self.source = source
        self.family = "ncx" if source == "frames" else "ncr"

    def decide(self, view: StageView) -> StoppingDecision:
        items = view.frames if self.source == "frames" else view.integrated
        clusters = view.cached(self.family, lambda: cluster_by_length(items[:view.stage]))
        return decide_cluster(self.params, clusters)

    def config(self) -> dict:
        p = self.params
        return {"size": p.min_cluster_size, "confidence": p.min_confidence, "gap": p.min_confidence_gap}


class FixedCountPolicy:
    family = "nk"

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("K must be >= 1")
        self.k = k

    def decide(self, view: StageView) -> StoppingDecision:
        return policy_n_k(self.k, view.stage)

    def config(self) -> dict:
        return {"k": self.k}


class NeverStop:
    family = "never"

    def decide(self, view: StageView) -> StoppingDecision:
        return CONTINUE

    def config(self) -> dict:
        return {}
