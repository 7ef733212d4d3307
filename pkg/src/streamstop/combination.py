"""Per-frame result combination (ROVER generalized to per-character alternatives).

Each new observation is aligned against the running composite with the
minimal-cost edit script under :func:`~streamstop.metrics.char_distance`,
then folded into the matched column.  Every column stands for all
observations seen so far: a frame that has nothing at a composite position
contributes a one-hot empty symbol there, and a column that only the new
frame has starts with empty-symbol rows for the earlier frames.

A column's distribution is a support-weighted mean of its rows.  Rows are
grouped by their top label, and each row weighs ``count ** support_power``
where ``count`` is the size of its group::

    q = sum_g count_g ** p * S_g / sum_g count_g ** (p + 1)

with ``S_g`` the summed rows of group ``g``.  ``p = 0`` is the plain running
mean.  Under the taxicab metric the plain mean stays as far from the truth
as an average single frame no matter how many frames are combined, so the
default ``p = 1`` lets agreeing frames outvote sporadic errors.  Identical
inputs combine to themselves for any ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .core import EPSILON, AlternativesMatrix, CharDistribution, _sort_key
from .metrics import cost_tables

MATCH, INSERT, DELETE = "M", "I", "D"

_TIE_EPS = 1e-12


@dataclass(frozen=True)
class CombinerConfig:
    support_power: float = 1.0

    def __post_init__(self):
        if self.support_power < 0:
            raise ValueError("support_power must be >= 0")


DEFAULT_COMBINER = CombinerConfig()


def align(composite: Sequence[CharDistribution], x: Sequence[CharDistribution]):
    """Minimal-cost edit script turning ``composite`` into ``x``.

    Returns ``(cost, ops)`` where ``ops`` is a list of ``(op, i, j)``:
    ``MATCH`` pairs composite row ``i`` with ``x`` row ``j``, ``INSERT`` adds
    ``x`` row ``j``, ``DELETE`` leaves composite row ``i`` unmatched.  Equal
    costs prefer a match, then an insertion, then a deletion.
    """
    m, k = len(composite), len(x)
    sub, gap_c, gap_x = cost_tables(composite, x)
    table = [[0.0] * (k + 1) for _ in range(m + 1)]
    first = table[0]
    for j in range(k):
        first[j + 1] = first[j] + gap_x[j]
    for i in range(m):
        prev, cur, row_sub, gc = table[i], table[i + 1], sub[i], gap_c[i]
        cur[0] = prev[0] + gc
        for j in range(k):
            best = prev[j] + row_sub[j]
            ins = cur[j] + gap_x[j]
            if ins < best:
                best = ins
            dele = prev[j + 1] + gc
            if dele < best:
                best = dele
            cur[j + 1] = best

    ops = []
    i, j = m, k
    while i or j:
        here = table[i][j]
        if i and j and table[i - 1][j - 1] + sub[i - 1][j - 1] <= here + _TIE_EPS:
            i, j = i - 1, j - 1
            ops.append((MATCH, i, j))
        elif j and table[i][j - 1] + gap_x[j - 1] <= here + _TIE_EPS:
            j -= 1
            ops.append((INSERT, None, j))
        else:
            i -= 1
            ops.append((DELETE, i, None))
    ops.reverse()
    return table[m][k], ops


# A column's groups: top label -> (row count, summed weights by label).
Groups = Dict[str, Tuple[int, Dict[str, float]]]


@dataclass(frozen=True)
class Column:
    """One composite position: its current distribution and the rows behind it."""

    row: CharDistribution
    support: int
    groups: Tuple[Tuple[str, int, Tuple[Tuple[str, float], ...]], ...]


def _add_row(groups: Groups, row: Optional[CharDistribution], times: int = 1) -> Groups:
    top = EPSILON if row is None else row.entries[0][0]
    count, sums = groups.get(top, (0, {}))
    sums = dict(sums)
    if row is None:
        sums[EPSILON] = sums.get(EPSILON, 0.0) + times
    else:
        for label, w in row.entries:
            sums[label] = sums.get(label, 0.0) + times * w
    out = dict(groups)
    out[top] = (count + times, sums)
    return out


def _column(groups: Groups, support: int, power: float) -> Column:
    num: Dict[str, float] = {}
    for count, sums in groups.values():
        w = count ** power if power else 1.0
        for label, s in sums.items():
            num[label] = num.get(label, 0.0) + w * s
    total = sum(num.values())
    entries = tuple(sorted(((lab, v / total) for lab, v in num.items() if v > 0.0), key=_sort_key))
    frozen = tuple((top, cnt, tuple(sorted(sums.items()))) for top, (cnt, sums) in sorted(groups.items()))
    return Column(CharDistribution._trusted(entries), support, frozen)


def _thaw(col: Column) -> Groups:
    return {top: (cnt, dict(sums)) for top, cnt, sums in col.groups}


Composite = Tuple[Column, ...]


def merge(composite: Composite, n: int, x: AlternativesMatrix,
          cfg: CombinerConfig = DEFAULT_COMBINER) -> Composite:
    """Composite after folding observation ``x`` into one built from ``n`` observations."""
    p = cfg.support_power
    if n == 0:
        # a lone observation is its own composite, bit for bit
        return tuple(replace(_column(_add_row({}, row), 1, p), row=row) for row in x.positions)
    _, ops = align([c.row for c in composite], x.positions)
    out = []
    for op, i, j in ops:
        if op == MATCH:
            col = composite[i]
            out.append(_column(_add_row(_thaw(col), x.positions[j]), col.support + 1, p))
        elif op == INSERT:
            out.append(_column(_add_row(_add_row({}, None, n), x.positions[j]), 1, p))
        else:
            col = composite[i]
            out.append(_column(_add_row(_thaw(col), None), col.support, p))
    return tuple(out)


class Accumulator:
    """Running integrated result R_n over the observations pushed so far."""

    __slots__ = ("composite", "n_observations", "config", "_integrated")

    def __init__(self, config: CombinerConfig = DEFAULT_COMBINER,
                 composite: Composite = (), n_observations: int = 0):
        self.config = config
        self.composite = tuple(composite)
        self.n_observations = n_observations
        self._integrated = None

    def push(self, x: AlternativesMatrix) -> "Accumulator":
        self.composite = merge(self.composite, self.n_observations, x, self.config)
        self.n_observations += 1
        self._integrated = None
        return self

    def extend(self, xs) -> "Accumulator":
        for x in xs:
            self.push(x)
        return self

    def integrated(self) -> AlternativesMatrix:
        if self.n_observations == 0:
            raise ValueError("integrated result requested from an empty accumulator")
        if self._integrated is None:
            self._integrated = AlternativesMatrix(tuple(c.row for c in self.composite))
        return self._integrated

    def combine_with(self, x: AlternativesMatrix) -> AlternativesMatrix:
        """Integrated result of the current observations plus ``x``; ``self`` is untouched."""
        if self.n_observations == 0:
            raise ValueError("combine_with requires at least one prior observation")
        merged = merge(self.composite, self.n_observations, x, self.config)
        return AlternativesMatrix(tuple(c.row for c in merged))

    def copy(self) -> "Accumulator":
        return Accumulator(self.config, self.composite, self.n_observations)

    @property
    def support(self) -> List[int]:
        return [c.support for c in self.composite]

    def __eq__(self, other):
        if not isinstance(other, Accumulator):
            return NotImplemented
        return (self.config == other.config and self.n_observations == other.n_observations
                and self.composite == other.composite)

    def __repr__(self):
        rows = [c.row for c in self.composite]
        return f"Accumulator(n={self.n_observations}, composite={rows!r})"


def integrate(frames, cfg: CombinerConfig = DEFAULT_COMBINER) -> AlternativesMatrix:
    return Accumulator(cfg).extend(frames).integrated()
