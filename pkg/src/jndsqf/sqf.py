"""Stair quality functions built from JND jump spectra."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import QF_MAX, QF_MIN
from .gmm import GaussianMixture
from .kmethod import KMethodModel

MERGE_TOL = 0.5


class NoLevelsError(ValueError):
    """No jumps at all: the data shows no perceptual level change."""


@dataclass(frozen=True)
class Jump:
    position: float
    height: float
    group: str


def normal_cdf(x: float, mean: float, stddev: float) -> float:
    return 0.5 * (1.0 + math.erf((x - mean) / (stddev * math.sqrt(2.0))))


def interval_mass(mean: float, stddev: float, lo: float, hi: float) -> float:
    """Probability mass of N(mean, stddev) inside [lo, hi]."""
    return normal_cdf(hi, mean, stddev) - normal_cdf(lo, mean, stddev)


def jumps_from_mixture(
    mix: GaussianMixture,
    interval: tuple[float, float],
    group_mass: float,
    group: str = "global",
    truncate: bool = True,
) -> list[Jump]:
    """One jump per component, height = group_mass * weight * area in interval.

    With ``truncate=False`` the area is taken over the whole line (always 1).
    """
    lo, hi = interval
    out = []
    for c in mix.components:
        area = interval_mass(c.mean, c.stddev, lo, hi) if truncate else 1.0
        h = group_mass * c.weight * area
        if h > 0:
            out.append(Jump(c.mean, h, group))
    return out


def jumps_from_kmethod(model: KMethodModel) -> list[Jump]:
    return [Jump(float(c.location), c.mass_fraction, "global") for c in model.clusters]


@dataclass(frozen=True)
class StairQualityFunction:
    jumps: tuple[Jump, ...]

    def __post_init__(self):
        pos = [j.position for j in self.jumps]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("jump positions must be strictly ascending")
        if any(not j.height > 0 for j in self.jumps):
            raise ValueError("jump heights must be positive")
        cum = np.cumsum([j.height for j in self.jumps])
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @property
    def positions(self) -> np.ndarray:
        return np.array([j.position for j in self.jumps])

    @property
    def heights(self) -> np.ndarray:
        return np.array([j.height for j in self.jumps])

    @property
    def total_height(self) -> float:
        return float(self._cum[-1])

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self, image_id: str, method: str) -> dict:
        return {
            "image_id": image_id,
            "method": method,
            "jumps": [
                {"qf": round(j.position, 6), "height": round(j.height, 6), "group": j.group}
                for j in self.jumps
            ],
            "levels": quality_levels(self),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("qf", "sqf"))
        qfs = np.arange(QF_MIN, QF_MAX + 1)
        for q, v in zip(qfs, evaluate(self, qfs)):
            w.writerow((int(q), f"{v:.6f}"))
        return buf.getvalue()


def _merge(jumps: list[Jump]) -> list[Jump]:
    out: list[Jump] = []
    for j in sorted(jumps, key=lambda j: j.position):
        if out and j.position - out[-1].position <= MERGE_TOL:
            prev = out[-1]
            h = prev.height + j.height
            pos = (prev.position * prev.height + j.position * j.height) / h
            group = prev.group if prev.height >= j.height else j.group
            out[-1] = Jump(pos, h, group)
        else:
            out.append(j)
    return out


def assemble(groups: Iterable[Sequence[Jump]]) -> StairQualityFunction:
    """Concatenate per-group jumps, merging ones closer than half a QF."""
    jumps = [j for g in groups for j in g]
    if not jumps:
        raise NoLevelsError("no jumps: no perceptual levels found")
    return StairQualityFunction(tuple(_merge(jumps)))


def evaluate(sqf: StairQualityFunction, x):
    """Share of total jump height at positions <= x (right-continuous)."""
    xa = np.asarray(x, dtype=float)
    idx = np.searchsorted(sqf.positions, xa, side="right")
    cum = np.concatenate(([0.0], sqf._cum))
    out = cum[idx] / sqf._cum[-1]
    return float(out) if np.ndim(out) == 0 else out


def quality_levels(sqf: StairQualityFunction) -> int:
    """Number of jumps; the stair has one more plateau than this."""
    return len(sqf.jumps)
