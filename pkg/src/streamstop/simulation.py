"""Synthetic recognizer output.

Stands in for a real OCR engine: the ground truth string is corrupted per
character (substitution, deletion, insertion) and corrupted rows are
softened into short top-k alternative lists.  All randomness is derived from
``(seed, frame index)`` through :class:`numpy.random.SeedSequence`, so a clip
does not depend on what else was generated before it.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import AlternativesMatrix, CharDistribution, ClipStream, _sort_key, from_plain_string
from .metrics import DEFAULT_METRIC, MetricConfig, rho

DEFAULT_ALPHABET = string.ascii_uppercase + string.digits

MAX_ALTERNATES = 3


@dataclass(frozen=True)
class NoiseModel:
    """Per-character corruption model.

    ``soften_rate`` is the chance that an uncorrupted character is still
    reported with alternatives (peak kept on the right label); 0 keeps clean
    characters one-hot.  ``confusion`` optionally maps a true character to
    relative weights over the labels it is mistaken for; by default the wrong
    label is uniform over the rest of the alphabet.
    """

    substitution_rate: float = 0.1
    insertion_rate: float = 0.0
    deletion_rate: float = 0.0
    confusion_temperature: float = 1.0
    alphabet: str = DEFAULT_ALPHABET
    seed: int = 0
    soften_rate: float = 0.0
    confusion: Optional[Mapping[str, Mapping[str, float]]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("substitution_rate", "insertion_rate", "deletion_rate", "soften_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.confusion_temperature > 0:
            raise ValueError("confusion_temperature must be positive")
        if not self.alphabet:
            raise ValueError("alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet has repeated characters")
        if len(self.alphabet) < 2 and self.substitution_rate > 0:
            raise ValueError("substitution needs at least two alphabet characters")

    def with_seed(self, seed: int) -> "NoiseModel":
        return replace(self, seed=int(seed))


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def frame_rng(nm: NoiseModel, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([nm.seed, frame_index]))


def _peak_weight(nm: NoiseModel, rng) -> float:
    # two-point split between the peak label and everything else; always > 1/2,
    # so alternates never outweigh the peak, and -> 1 as temperature -> 0
    margin = 0.25 + 1.75 * rng.random()
    z = margin / nm.confusion_temperature
    return 1.0 / (1.0 + math.exp(-z)) if z < 700 else 1.0


def _confuse(true_char: str, nm: NoiseModel, rng) -> str:
    if nm.confusion and true_char in nm.confusion:
        table = {k: v for k, v in nm.confusion[true_char].items() if k != true_char and v > 0}
        if table:
            labels = sorted(table)
            p = np.array([table[k] for k in labels], dtype=float)
            return labels[rng.choice(len(labels), p=p / p.sum())]
    others = [ch for ch in nm.alphabet if ch != true_char]
    return others[rng.integers(len(others))]


def _soft_row(peak: str, nm: NoiseModel, rng, must_include: Optional[str] = None) -> CharDistribution:
    top = _peak_weight(nm, rng)
    rest = 1.0 - top
    weights = {peak: top}
    if rest > 0.0:
        pool = [ch for ch in nm.alphabet if ch != peak and ch != must_include]
        n_alt = int(rng.integers(1, MAX_ALTERNATES + 1))
        picks = []
        if must_include is not None:
            picks.append(must_include)
        if pool:
            k = min(n_alt - len(picks), len(pool))
            if k > 0:
                picks.extend(pool[i] for i in rng.choice(len(pool), size=k, replace=False))
        if picks:
            share = rng.dirichlet(np.ones(len(picks)))
            if must_include is not None:
                # the true label stays the strongest alternate
                share = np.sort(share)[::-1]
            for ch, s in zip(picks, share):
                weights[ch] = weights.get(ch, 0.0) + rest * float(s)
        else:
            weights[peak] = 1.0
    total = sum(weights.values())
    entries = tuple(sorted(((k, w / total) for k, w in weights.items() if w > 0.0), key=_sort_key))
    return CharDistribution._trusted(entries)


def simulate_frame(truth: str, nm: NoiseModel, rng: np.random.Generator) -> AlternativesMatrix:
    rows = []
    for ch in truth:
        u = rng.random()
        if u < nm.deletion_rate:
            pass
        elif u < nm.deletion_rate + (1.0 - nm.deletion_rate) * nm.substitution_rate:
            rows.append(_soft_row(_confuse(ch, nm, rng), nm, rng, must_include=ch))
        elif nm.soften_rate and rng.random() < nm.soften_rate:
            rows.append(_soft_row(ch, nm, rng))
        else:
            rows.append(CharDistribution.one_hot(ch))
        if nm.insertion_rate and rng.random() < nm.insertion_rate:
            spurious = nm.alphabet[rng.integers(len(nm.alphabet))]
            rows.append(_soft_row(spurious, nm, rng))
    return AlternativesMatrix(tuple(rows))


def simulate_clip(truth: str, n_frames: int = 30, nm: NoiseModel = NoiseModel(),
                  clip_id: str = "clip", field_id: str = "field") -> ClipStream:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    bad = set(truth) - set(nm.alphabet)
    if bad:
        raise ValueError(f"truth uses characters outside the alphabet: {sorted(bad)}")
    frames = tuple(simulate_frame(truth, nm, frame_rng(nm, i)) for i in range(n_frames))
    return ClipStream(clip_id, field_id, truth, frames)


@dataclass(frozen=True)
class DatasetSpec:
    """A synthetic dataset: random truths, per-clip noise level drawn from a list."""

    n_clips: int = 500
    n_frames: int = 30
    min_length: int = 4
    max_length: int = 15
    substitution_rates: Tuple[float, ...] = (0.1, 0.2, 0.3)
    noise: NoiseModel = NoiseModel()
    seed: int = 0


def simulate_dataset(spec: DatasetSpec) -> list:
    clips = []
    width = len(str(max(spec.n_clips - 1, 0)))
    for i in range(spec.n_clips):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i, 0]))
        length = int(rng.integers(spec.min_length, spec.max_length + 1))
        alphabet = spec.noise.alphabet
        truth = "".join(alphabet[k] for k in rng.integers(len(alphabet), size=length))
        rate = spec.substitution_rates[int(rng.integers(len(spec.substitution_rates)))]
        nm = replace(spec.noise, substitution_rate=rate, seed=derive_seed(spec.seed, i, 1))
        clip = simulate_clip(truth, spec.n_frames, nm, clip_id=f"clip{i:0{width}d}", field_id="field")
        clips.append(ClipStream(clip.clip_id, clip.field_id, truth, clip.frames,
                                {"substitution_rate": rate}))
    return clips


def mean_frame_distance(clips: Sequence[ClipStream], metric: MetricConfig = DEFAULT_METRIC) -> float:
    values = [rho(x, from_plain_string(c.ground_truth), metric) for c in clips for x in c.frames]
    return float(np.mean(values)) if values else 0.0
