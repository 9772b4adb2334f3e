"""End-to-end G-method and the G-vs-K comparison for one image."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ImageJndSet, build_histogram, points_to_arrays
from .gmm import (
    DEFAULT_CAPS,
    VARIANCE_FLOOR,
    FitReport,
    GaussianComponent,
    GaussianMixture,
    bic_of,
    mixture_log_likelihood,
    n_free_params,
    select_model,
)
from .kmethod import KMethodModel, kmethod_fit
from .partition import GroupPartition, split_groups
from .sqf import StairQualityFunction, assemble, jumps_from_kmethod, jumps_from_mixture


@dataclass(frozen=True)
class BicTerms:
    log_likelihood: float
    n_free_params: int
    n_samples: float

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
        nll, cx = self.nll_term, self.complexity_term
        return {
            "nll_term": nll,
            "complexity_term": cx,
            "bic": nll + cx,
            "n_free_params": self.n_free_params,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class GMethodResult:
    image_id: str
    partition: GroupPartition
    reports: dict[str, FitReport]
    sqf: StairQualityFunction
    combined: GaussianMixture
    terms: BicTerms
    additive_terms: BicTerms

    @property
    def bic(self) -> float:
        return self.terms.bic


def combine_groups(partition: GroupPartition, reports: dict[str, FitReport]) -> GaussianMixture:
    """Whole-image mixture: group j's weights scaled by its share of the mass."""
    total = partition.mass
    comps = []
    for g in partition.groups():
        share = g.mass / total
        comps.extend(
            GaussianComponent(share * c.weight, c.mean, c.stddev) for c in reports[g.label].selected.components
        )
    comps.sort(key=lambda c: c.mean)
    return GaussianMixture(tuple(comps), float("nan"), total)


def gmethod_fit(
    image: ImageJndSet,
    caps: dict[str, int] | None = None,
    truncate: bool = True,
    variance_floor: float = VARIANCE_FLOOR,
) -> GMethodResult:
    """Partition raw samples, select a GMM per group, build the G-SQF.

    The image-level BIC scores the combined mixture on all raw samples with
    3*sum(N_j) - 1 free parameters.  The additive variant (sum of group
    log-likelihoods, sum of group parameter counts) is kept alongside.
    """
    caps = {**DEFAULT_CAPS, **(caps or {})}
    points = image.points()
    if not points:
        raise ValueError(f"image {image.image_id}: no samples")
    partition = split_groups(points, build_histogram(points))
    reports = {g.label: select_model(g, caps[g.label], variance_floor) for g in partition.groups()}
    sqf = assemble(
        jumps_from_mixture(reports[g.label].selected, g.interval, g.mass, g.label, truncate)
        for g in partition.groups()
    )

    combined = combine_groups(partition, reports)
    x, w = points_to_arrays(points)
    ll = mixture_log_likelihood(x, w, combined.weights, combined.means, combined.stddevs)
    combined = GaussianMixture(combined.components, ll, float(w.sum()))
    terms = BicTerms(ll, n_free_params(combined.n_components), float(w.sum()))

    fitted = [r.selected for r in reports.values() if r.selected.components]
    additive = BicTerms(
        sum(m.log_likelihood for m in fitted),
        sum(m.n_free_params for m in fitted),
        float(w.sum()),
    )
    return GMethodResult(image.image_id, partition, reports, sqf, combined, terms, additive)


@dataclass(frozen=True)
class Comparison:
    image_id: str
    g: GMethodResult
    k: KMethodModel
    k_sqf: StairQualityFunction

    @property
    def g_wins(self) -> bool:
        return self.g.bic < self.k.bic

    def table_rows(self) -> list[dict]:
        """One row per method: -2 ln L, complexity, BIC."""
        k_terms = BicTerms(self.k.log_likelihood, self.k.n_free_params, self.k.n_samples)
        return [
            {"image_id": self.image_id, "method": "K", "levels": len(self.k_sqf.jumps), **k_terms.to_dict()},
            {"image_id": self.image_id, "method": "G", "levels": len(self.g.sqf.jumps), **self.g.terms.to_dict()},
        ]


def compare_image(
    image: ImageJndSet,
    caps: dict[str, int] | None = None,
    truncate: bool = True,
    variance_floor: float = VARIANCE_FLOOR,
) -> Comparison:
    g = gmethod_fit(image, caps, truncate, variance_floor)
    k = kmethod_fit(image, variance_floor)
    return Comparison(image.image_id, g, k, assemble([jumps_from_kmethod(k)]))


def group_density(result: GMethodResult, qf: np.ndarray) -> dict[str, np.ndarray]:
    """Per-group mixture densities scaled to sample mass (histogram units)."""
    out = {}
    for g in result.partition.groups():
        mix = result.reports[g.label].selected
        out[g.label] = mix.pdf(qf) * g.mass
    return out
