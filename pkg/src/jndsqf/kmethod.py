"""k-means baseline (K-method) for aggregating JND samples."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .data import ImageJndSet, JndPoint, points_to_arrays, subject_weighting
from .gmm import VARIANCE_FLOOR, bic_of, mixture_log_likelihood, n_free_params

MAX_ITER = 500


class TooFewValuesError(ValueError):
    """Fewer distinct QF values than requested clusters."""


@dataclass(frozen=True)
class Cluster:
    location: int
    gauss_mean: float
    gauss_var: float
    mass_fraction: float
    qfs: tuple[int, ...]


@dataclass(frozen=True)
class KMethodModel:
    k: int
    clusters: tuple[Cluster, ...]
    log_likelihood: float
    n_samples: float
    iterations: int

    @property
    def n_free_params(self) -> int:
        return n_free_params(self.k)

    @property
    def nll_term(self) -> float:
        return -2.0 * self.log_likelihood

    @property
    def complexity_term(self) -> float:
        return self.n_free_params * math.log(self.n_samples)

    @property
    def bic(self) -> float:
        return bic_of(self.log_likelihood, self.n_free_params, self.n_samples)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "clusters": [
                {
                    "location": c.location,
                    "variance": round(c.gauss_var, 6),
                    "mass_fraction": round(c.mass_fraction, 6),
                }
                for c in self.clusters
            ],
            "log_likelihood": round(self.log_likelihood, 6),
            "n_samples": self.n_samples,
            "n_free_params": self.n_free_params,
            "nll_term": round(self.nll_term, 6),
            "complexity_term": round(self.complexity_term, 6),
            "bic": round(self.bic, 6),
            "iterations": self.iterations,
        }


def choose_k(image: ImageJndSet) -> int:
    """Mean JND count per subject, rounded half up."""
    if not image.subjects:
        raise ValueError("image has no subjects")
    mean = Fraction(image.n_points, len(image.subjects))
    return math.floor(mean + Fraction(1, 2))


def _weighted_quantile(x, w, p: float) -> float:
    # x sorted ascending; smallest value whose cumulative share reaches p
    c = np.cumsum(w) / w.sum()
    return float(x[min(np.searchsorted(c, p - 1e-12), len(x) - 1)])


def kmeans_1d(x, w, k: int, max_iter: int = MAX_ITER) -> tuple[np.ndarray, np.ndarray, int]:
    """Weighted Lloyd iterations on scalar data.

    Centres start at the weighted (i - 0.5)/k quantiles.  An emptied cluster
    is reseeded at the point farthest from its current centre.  Returns
    ``(labels, centres, iterations)`` with clusters ordered by centre.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    if len(np.unique(xs)) < k:
        raise TooFewValuesError(f"{len(np.unique(xs))} distinct values for k={k}; lower k")

    centres = np.array([_weighted_quantile(xs, ws, (i + 0.5) / k) for i in range(k)])
    labels = None
    it = 0
    while it < max_iter:
        it += 1
        # argmin picks the lower-index centre on distance ties
        new = np.argmin(np.abs(xs[:, None] - centres[None, :]), axis=1)
        for j in range(k):
            if not (new == j).any():
                far = int(np.argmax(np.abs(xs - centres[new])))
                new[far] = j
                centres[j] = xs[far]
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            m = labels == j
            centres[j] = np.dot(ws[m], xs[m]) / ws[m].sum()

    # relabel so cluster index follows centre order
    rank = np.empty(k, dtype=int)
    rank[np.argsort(centres, kind="stable")] = np.arange(k)
    out = np.empty_like(labels)
    out[order] = rank[labels]
    return out, np.sort(centres), it


def weighted_median(x, w) -> float:
    """Lower weighted median: smallest value whose cumulative mass reaches half.

    With an exact even split this is the lower of the two straddling values,
    i.e. their midpoint rounded to the nearer observation with ties going low.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    c = np.cumsum(ws)
    half = c[-1] / 2
    return float(xs[np.searchsorted(c, half * (1 - 1e-12))])


def kmethod_fit(image: ImageJndSet, variance_floor: float = VARIANCE_FLOOR, k: int | None = None) -> KMethodModel:
    """Subject-weighted k-means baseline scored as a Gaussian mixture.

    Each cluster is summarised by its weighted median (the JND location),
    its weighted sample variance and its share of the weighted mass.  The
    mixture of these Gaussians is scored on the raw, unweighted samples so
    its BIC is comparable with the G-method's.
    """
    if not image.subjects:
        raise ValueError("image has no subjects")
    if k is None:
        k = choose_k(image)
    x, w = points_to_arrays(subject_weighting(image))
    labels, _, iterations = kmeans_1d(x, w, k)
    total = w.sum()
    clusters = []
    for j in range(k):
        m = labels == j
        xj, wj = x[m], w[m]
        loc = weighted_median(xj, wj)
        mean = np.dot(wj, xj) / wj.sum()
        var = np.dot(wj, (xj - mean) ** 2) / wj.sum()
        clusters.append(
            Cluster(
                location=int(loc),
                gauss_mean=float(loc),
                gauss_var=float(max(var, variance_floor)),
                mass_fraction=float(wj.sum() / total),
                qfs=tuple(int(v) for v in xj),
            )
        )
    raw_x, raw_w = points_to_arrays(image.points())
    ll = mixture_log_likelihood(
        raw_x,
        raw_w,
        [c.mass_fraction for c in clusters],
        [c.gauss_mean for c in clusters],
        [math.sqrt(c.gauss_var) for c in clusters],
    )
    return KMethodModel(k, tuple(clusters), ll, float(raw_w.sum()), iterations)


def kmeans_points(points: Sequence[JndPoint], k: int):
    """``kmeans_1d`` over JndPoints (duplicates collapsed by QF)."""
    x, w = points_to_arrays(points)
    labels, centres, it = kmeans_1d(x, w, k)
    return x, labels, centres
