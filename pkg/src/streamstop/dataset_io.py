"""Line-delimited clip datasets.

One JSON object per line, keys in this order::

    {"clip_id": str, "field_id": str, "ground_truth": str,
     "frames": [[[label, weight], ...], ...], "metadata": {...}}

``frames`` holds one list of positions per frame; each position is a list of
``[label, weight]`` pairs.  Labels are single characters, except that the
empty symbol is written ``"#E"`` and a literal ``#`` is written ``"##"``.
Weights are written in shortest round-trip form, so write/read is lossless;
rows off unit mass by at most 1e-6 (hand-edited or foreign files) are
renormalized on reading.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List

from .core import EPSILON, AlternativesMatrix, CharDistribution, ClipStream, InvalidDistribution

EPSILON_TOKEN = "#E"
ESCAPE = "#"


class DatasetError(ValueError):
    pass


def encode_label(label: str) -> str:
    if label == EPSILON:
        return EPSILON_TOKEN
    if label == ESCAPE:
        return ESCAPE + ESCAPE
    return label


def decode_label(token: str) -> str:
    if token == EPSILON_TOKEN:
        return EPSILON
    if token == ESCAPE + ESCAPE:
        return ESCAPE
    if len(token) != 1 or token == ESCAPE:
        raise ValueError(f"bad label token {token!r}")
    return token


def record_to_dict(clip: ClipStream) -> dict:
    return {
        "clip_id": clip.clip_id,
        "field_id": clip.field_id,
        "ground_truth": clip.ground_truth,
        "frames": [[[[encode_label(lab), float(w)] for lab, w in row.entries] for row in frame]
                   for frame in clip.frames],
        "metadata": dict(sorted(clip.metadata.items())),
    }


def dumps_record(clip: ClipStream) -> str:
    return json.dumps(record_to_dict(clip), ensure_ascii=False, separators=(",", ":"), sort_keys=False)


def record_from_dict(obj: dict) -> ClipStream:
    try:
        clip_id = str(obj["clip_id"])
        field_id = str(obj["field_id"])
        truth = str(obj["ground_truth"])
        raw_frames = obj["frames"]
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"missing or malformed key: {exc}") from None
    frames = []
    for f, frame in enumerate(raw_frames):
        rows = []
        for p, position in enumerate(frame):
            try:
                entries = tuple((decode_label(tok), float(w)) for tok, w in position)
                rows.append(CharDistribution(entries))
            except (InvalidDistribution, ValueError, TypeError) as exc:
                raise DatasetError(f"clip {clip_id!r} frame {f} position {p}: {exc}") from None
        frames.append(AlternativesMatrix(tuple(rows)))
    if not frames:
        raise DatasetError(f"clip {clip_id!r} has no frames")
    return ClipStream(clip_id, field_id, truth, tuple(frames), dict(obj.get("metadata") or {}))


def read_dataset(path) -> List[ClipStream]:
    clips = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{lineno}: record is not an object")
            try:
                clips.append(record_from_dict(obj))
            except DatasetError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return clips


def write_dataset(records: Iterable[ClipStream], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for clip in records:
            fh.write(dumps_record(clip))
            fh.write("\n")


def loop_clip(clip: ClipStream, target_len: int) -> ClipStream:
    """Repeat the frames cyclically (or truncate) to exactly ``target_len``."""
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    n = len(clip.frames)
    if n == target_len:
        return clip
    frames = tuple(clip.frames[i % n] for i in range(target_len))
    return ClipStream(clip.clip_id, clip.field_id, clip.ground_truth, frames, clip.metadata)
