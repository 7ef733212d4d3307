"""Recognition-result data model.

A recognized string is an :class:`AlternativesMatrix`: one
:class:`CharDistribution` per character position, each a sparse,
row-stochastic list of ``(label, weight)`` alternatives.

Labels are single characters.  The empty symbol :data:`EPSILON` is a
first-class alphabet member meaning "no character here"; it is represented
by the empty string so it can never collide with literal text and it sorts
before every real character.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Tuple

EPSILON = ""

#: rows are accepted as-is within this distance of unit mass
NORM_TOL = 1e-9
#: rows within this distance are renormalized on ingest, beyond it rejected
INGEST_TOL = 1e-6


class InvalidDistribution(ValueError):
    pass


def _sort_key(entry: Tuple[str, float]):
    label, weight = entry
    return (-weight, label)


@dataclass(frozen=True)
class CharDistribution:
    """Class-membership distribution of one character position.

    Entries are sorted by descending weight, ties by ascending label; zero
    weights are dropped (absent labels carry an implied zero).
    """

    entries: Tuple[Tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((str(lab), float(w)) for lab, w in self.entries)
        seen = set()
        total = 0.0
        for label, weight in entries:
            if len(label) > 1:
                raise InvalidDistribution(f"label {label!r} is not a single character")
            if label in seen:
                raise InvalidDistribution(f"duplicate label {label!r}")
            if not math.isfinite(weight) or weight < 0.0:
                raise InvalidDistribution(f"bad weight {weight!r} for label {label!r}")
            seen.add(label)
            total += weight
        if abs(total - 1.0) > INGEST_TOL:
            raise InvalidDistribution(f"weights sum to {total!r}, expected 1")
        if abs(total - 1.0) > NORM_TOL:
            entries = tuple((lab, w / total) for lab, w in entries)
        entries = tuple(sorted((e for e in entries if e[1] > 0.0), key=_sort_key))
        object.__setattr__(self, "entries", entries)

    @classmethod
    def _trusted(cls, entries) -> "CharDistribution":
        # caller guarantees distinct labels, unit mass and canonical order
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", entries)
        return obj

    @classmethod
    def from_mapping(cls, weights: Mapping[str, float]) -> "CharDistribution":
        return cls(tuple(weights.items()))

    @classmethod
    def one_hot(cls, label: str) -> "CharDistribution":
        return cls(((label, 1.0),))

    @cached_property
    def weights(self) -> dict:
        return dict(self.entries)

    @property
    def top_label(self) -> str:
        return self.entries[0][0]

    @property
    def top_weight(self) -> float:
        return self.entries[0][1]

    def get(self, label: str) -> float:
        return self.weights.get(label, 0.0)

    def __repr__(self):
        body = ", ".join(f"{_show(lab)}:{w:.6g}" for lab, w in self.entries)
        return "{" + body + "}"


EPSILON_ROW = CharDistribution.one_hot(EPSILON)


def _show(label: str) -> str:
    return "ε" if label == EPSILON else repr(label)


@dataclass(frozen=True)
class AlternativesMatrix:
    """A string recognition result with per-character alternatives.

    ``len(x) == 0`` encodes the empty string.
    """

    positions: Tuple[CharDistribution, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __getitem__(self, i):
        return self.positions[i]

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, float]]) -> "AlternativesMatrix":
        return cls(tuple(CharDistribution.from_mapping(r) for r in rows))

    @cached_property
    def text(self) -> str:
        return argmax_string(self)

    def __repr__(self):
        return f"AlternativesMatrix({list(self.positions)!r})"


@dataclass(frozen=True)
class ClipStream:
    """Ordered per-frame results for one text field, plus its ground truth."""

    clip_id: str
    field_id: str
    ground_truth: str
    frames: Tuple[AlternativesMatrix, ...]
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError(f"clip {self.clip_id!r} has no frames")


@dataclass(frozen=True)
class LossParams:
    observation_cost: float = 0.0
    delta: float = 0.1

    def __post_init__(self):
        if self.observation_cost < 0 or self.delta < 0:
            raise ValueError("observation_cost and delta must be nonnegative")


class Verdict(enum.Enum):
    STOP = "stop"
    CONTINUE = "continue"


@dataclass(frozen=True)
class StoppingDecision:
    verdict: Verdict
    statistic: Optional[float] = None

    def __post_init__(self):
        s = self.statistic
        if s is not None and not (math.isfinite(s) and s >= 0.0):
            raise ValueError(f"statistic must be finite and >= 0, got {s!r}")

    @property
    def stop(self) -> bool:
        return self.verdict is Verdict.STOP


def argmax_string(x: AlternativesMatrix) -> str:
    """Top label of every position, skipping positions won by the empty symbol."""
    return "".join(row.entries[0][0] for row in x.positions)


def from_plain_string(s: str) -> AlternativesMatrix:
    return AlternativesMatrix(tuple(CharDistribution.one_hot(ch) for ch in s))


def renormalize(row: CharDistribution) -> CharDistribution:
    total = sum(w for _, w in row.entries)
    return CharDistribution(tuple((lab, w / total) for lab, w in row.entries))


def text_length(x: AlternativesMatrix) -> int:
    return len(x.text)


def as_matrix(value) -> AlternativesMatrix:
    if isinstance(value, AlternativesMatrix):
        return value
    if isinstance(value, str):
        return from_plain_string(value)
    if isinstance(value, Sequence):
        return AlternativesMatrix.from_rows(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as AlternativesMatrix")
