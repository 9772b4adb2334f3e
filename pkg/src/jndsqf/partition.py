"""Split JND points into low / middle / high QF groups.

Boundary candidates are the points at the top-10% and top-50% ranks (QF
descending).  Each candidate is moved to a valley of the raw histogram and
points sitting exactly on a boundary are shared half-and-half by the two
adjacent groups.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .data import QF_MAX, QF_MIN, JndPoint, QfHistogram, build_histogram

GROUP_LABELS = ("low", "middle", "high")


@dataclass(frozen=True)
class QfGroup:
    label: str
    lo: int
    hi: int
    points: tuple[JndPoint, ...]

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"group {self.label}: lo {self.lo} > hi {self.hi}")
        for p in self.points:
            if not self.lo <= p.qf <= self.hi:
                raise ValueError(f"group {self.label}: point qf {p.qf} outside [{self.lo}, {self.hi}]")

    @property
    def mass(self) -> float:
        return math.fsum(p.weight for p in self.points)

    @property
    def interval(self) -> tuple[int, int]:
        return self.lo, self.hi


@dataclass(frozen=True)
class GroupPartition:
    low: QfGroup
    middle: QfGroup
    high: QfGroup
    boundaries: tuple[int, int]  # (low/middle, middle/high)
    candidates: tuple[int, int] = (0, 0)  # unrefined (50%, 10%) rank QFs

    def groups(self) -> tuple[QfGroup, QfGroup, QfGroup]:
        return self.low, self.middle, self.high

    @property
    def mass(self) -> float:
        return math.fsum(g.mass for g in self.groups())


def percentile_candidates(points: Sequence[JndPoint]) -> tuple[int, int]:
    """QFs of the points at ranks ceil(0.1 n) and ceil(0.5 n), QF descending.

    Returns ``(top10, top50)``; weights are ignored.
    """
    if not points:
        raise ValueError("need at least one point")
    qfs = sorted((p.qf for p in points), reverse=True)
    n = len(qfs)
    # integer ceil; 0.1 * n in floats can land a hair above an integer
    r10 = max(1, -(-n // 10))
    r50 = max(1, -(-n // 2))
    return qfs[r10 - 1], qfs[r50 - 1]


def _plateau(h, i: int) -> tuple[int, int]:
    v = h[i]
    a = i
    while a > 0 and h[a - 1] == v:
        a -= 1
    b = i
    while b < len(h) - 1 and h[b + 1] == v:
        b += 1
    return a, b


def _neighbors(h, i: int) -> tuple[float | None, float | None]:
    """Values just outside the plateau containing bin ``i`` (None at an edge)."""
    a, b = _plateau(h, i)
    left = h[a - 1] if a > 0 else None
    right = h[b + 1] if b < len(h) - 1 else None
    return left, right


def _is_min(h, i: int) -> bool:
    if h[i] == 0:
        return True
    return all(n is None or n > h[i] for n in _neighbors(h, i))


def _is_max(h, i: int) -> bool:
    return all(n is None or n < h[i] for n in _neighbors(h, i))


def _walk(h, i: int, step: int) -> int:
    """First local minimum (or zero bin) strictly past ``i`` in direction ``step``."""
    j = i + step
    while 0 <= j < len(h):
        if _is_min(h, j):
            return j
        j += step
    return 0 if step < 0 else len(h) - 1


def refine_boundary(candidate_qf: int, hist: QfHistogram) -> int:
    """Move a candidate QF to a histogram valley.

    A local minimum (or empty bin) stays put.  From a local maximum the
    nearest valley on each side is found and the lower one wins; ties go to
    the closer valley, then to the higher QF.  From a slope the walk goes
    downhill (the steeper side if both are lower).
    """
    if not QF_MIN <= candidate_qf <= QF_MAX:
        raise ValueError(f"candidate {candidate_qf} outside {QF_MIN}..{QF_MAX}")
    h = hist.mass
    i = candidate_qf - QF_MIN
    if _is_min(h, i):
        return candidate_qf
    if _is_max(h, i):
        left, right = _walk(h, i, -1), _walk(h, i, +1)
        key_l = (h[left], i - left, 1)
        key_r = (h[right], right - i, 0)
        return (left if key_l < key_r else right) + QF_MIN
    nl, nr = _neighbors(h, i)
    down_left = nl is not None and nl < h[i]
    down_right = nr is not None and nr < h[i]
    if down_left and down_right:
        step = -1 if nl < nr else +1
    else:
        step = -1 if down_left else +1
    a, b = _plateau(h, i)
    return _walk(h, a if step < 0 else b, step) + QF_MIN


def split_groups(points: Sequence[JndPoint], hist: QfHistogram | None = None) -> GroupPartition:
    """Partition points into low/middle/high groups.

    ``hist`` defaults to the histogram of ``points``.  Boundary intervals
    are ``[1, b_lo]``, ``[b_lo, b_hi]`` and ``[b_hi, 100]``.
    """
    if not points:
        raise ValueError("need at least one point")
    if hist is None:
        hist = build_histogram(points)
    top10, top50 = percentile_candidates(points)
    b1 = refine_boundary(top10, hist)
    b2 = refine_boundary(top50, hist)
    b_lo, b_hi = min(b1, b2), max(b1, b2)

    low, mid, high = [], [], []
    for p in points:
        half = JndPoint(p.qf, p.weight / 2)
        if b_lo == b_hi == p.qf:
            low.append(half)
            high.append(half)
        elif p.qf < b_lo:
            low.append(p)
        elif p.qf == b_lo:
            low.append(half)
            mid.append(half)
        elif p.qf < b_hi:
            mid.append(p)
        elif p.qf == b_hi:
            mid.append(half)
            high.append(half)
        else:
            high.append(p)

    return GroupPartition(
        low=QfGroup("low", QF_MIN, b_lo, tuple(low)),
        middle=QfGroup("middle", b_lo, b_hi, tuple(mid)),
        high=QfGroup("high", b_hi, QF_MAX, tuple(high)),
        boundaries=(b_lo, b_hi),
        candidates=(top50, top10),
    )
