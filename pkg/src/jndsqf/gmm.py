"""Weighted 1-D Gaussian mixtures: EM fitting and BIC model selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import JndPoint, QfHistogram, build_histogram, points_to_arrays
from .partition import QfGroup

VARIANCE_FLOOR = 0.25
MAX_ITER = 500
TOL = 1e-8
# bins within this many QF of a chosen initial mean are skipped, so two
# seeds never start inside one +-2 QF band around a single JND level
INIT_MIN_SPACING = 4

DEFAULT_CAPS = {"high": 3, "middle": 4, "low": 3}

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class InsufficientSupportError(ValueError):
    """Not enough distinct support to initialise N components."""


class DegenerateFitError(RuntimeError):
    """EM lost a component or a point received zero responsibility."""


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: float
    stddev: float


@dataclass(frozen=True)
class GaussianMixture:
    components: tuple[GaussianComponent, ...]
    log_likelihood: float
    n_samples_mass: float
    converged: bool = True
    iterations: int = 0

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_free_params(self) -> int:
        return n_free_params(self.n_components)

    @property
    def nll_term(self) -> float:
        return -2.0 * self.log_likelihood

    @property
    def complexity_term(self) -> float:
        if not self.components:
            return 0.0
        return self.n_free_params * math.log(self.n_samples_mass)

    @property
    def bic(self) -> float:
        if not self.components:
            return 0.0
        return bic_of(self.log_likelihood, self.n_free_params, self.n_samples_mass)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def stddevs(self) -> np.ndarray:
        return np.array([c.stddev for c in self.components])

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.components:
            return np.zeros_like(x)
        return np.exp(_log_mix(x, self.weights, self.means, self.stddevs))

    def to_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "components": [
                {"weight": round(c.weight, 6), "mean": round(c.mean, 6), "stddev": round(c.stddev, 6)}
                for c in self.components
            ],
            "log_likelihood": round(self.log_likelihood, 6),
            "n_samples_mass": round(self.n_samples_mass, 6),
            "n_free_params": self.n_free_params if self.components else 0,
            "nll_term": round(self.nll_term, 6),
            "complexity_term": round(self.complexity_term, 6),
            "bic": round(self.bic, 6),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        comps = tuple(GaussianComponent(c["weight"], c["mean"], c["stddev"]) for c in d["components"])
        return cls(comps, d["log_likelihood"], d["n_samples_mass"], d.get("converged", True), d.get("iterations", 0))


EMPTY_MIXTURE = GaussianMixture((), 0.0, 0.0)


@dataclass(frozen=True)
class CandidateFit:
    n_components: int
    bic: float | None
    converged: bool
    iterations: int
    skipped: str | None = None


@dataclass(frozen=True)
class FitReport:
    candidates: tuple[CandidateFit, ...]
    selected: GaussianMixture
    fits: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "candidates": [
                {
                    "n_components": c.n_components,
                    "bic": None if c.bic is None else round(c.bic, 6),
                    "converged": c.converged,
                    "iterations": c.iterations,
                    **({"skipped": c.skipped} if c.skipped else {}),
                }
                for c in self.candidates
            ],
            "selected": self.selected.to_dict(),
        }


def n_free_params(n_components: int) -> int:
    """N means, N stddevs and N - 1 free mixture weights."""
    return 3 * n_components - 1


def bic_of(log_likelihood: float, n_free_params: int, n_mass: float) -> float:
    """-2 ln L + k ln n."""
    if n_mass <= 0:
        raise ValueError(f"sample mass must be positive, got {n_mass}")
    return -2.0 * log_likelihood + n_free_params * math.log(n_mass)


def _log_normal(x, means, stddevs):
    # rows: samples, columns: components
    z = (x[:, None] - means[None, :]) / stddevs[None, :]
    return -0.5 * z * z - np.log(stddevs)[None, :] - _LOG_SQRT_2PI


def _logsumexp(a):
    m = a.max(axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


def _log_mix(x, weights, means, stddevs):
    x = np.atleast_1d(x)
    with np.errstate(divide="ignore"):
        return _logsumexp(np.log(weights)[None, :] + _log_normal(x, means, stddevs))


def mixture_log_likelihood(x, w, weights, means, stddevs) -> float:
    """Weighted log-likelihood sum_i w_i ln f(x_i)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(np.dot(w, _log_mix(x, np.asarray(weights), np.asarray(means), np.asarray(stddevs))))


@dataclass(frozen=True)
class InitialParams:
    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray


def init_params(hist: QfHistogram, n_components: int) -> InitialParams:
    """Means at the N largest histogram bins, unit stddevs, uniform weights.

    Bins are taken by descending mass (ties toward lower QF), skipping any
    bin within ``INIT_MIN_SPACING`` QF of a mean already chosen.
    """
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    qfs = hist.positive_bins()
    # stable sort on -mass keeps ascending QF order among equal masses
    order = qfs[np.argsort(-hist.mass[qfs - 1], kind="stable")]
    chosen: list[int] = []
    for q in order:
        if all(abs(q - c) > INIT_MIN_SPACING for c in chosen):
            chosen.append(int(q))
            if len(chosen) == n_components:
                break
    if len(chosen) < n_components:
        raise InsufficientSupportError(
            f"only {len(chosen)} separated positive bins for {n_components} components"
        )
    means = np.array(sorted(chosen), dtype=float)
    return InitialParams(
        weights=np.full(n_components, 1.0 / n_components),
        means=means,
        stddevs=np.ones(n_components),
    )


IterationCallback = Callable[[int, np.ndarray, np.ndarray, np.ndarray, float], None]


def em_arrays(
    x,
    w,
    init: InitialParams,
    variance_floor: float = VARIANCE_FLOOR,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    callback: IterationCallback | None = None,
) -> GaussianMixture:
    """Weighted EM on samples ``x`` with positive masses ``w``.

    ``callback(iteration, weights, means, stddevs, log_likelihood)`` is
    called with the parameters after every M-step and the log-likelihood
    they attain.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if (w <= 0).any():
        raise ValueError("all weights must be positive")
    k = len(init.means)
    total = float(w.sum())
    if total < k:
        raise InsufficientSupportError(f"sample mass {total} below component count {k}")
    sd_floor = math.sqrt(variance_floor)

    alpha = np.array(init.weights, dtype=float)
    mu = np.array(init.means, dtype=float)
    sd = np.maximum(np.array(init.stddevs, dtype=float), sd_floor)

    def loglik_and_resp(alpha, mu, sd):
        with np.errstate(divide="ignore"):
            logp = np.log(alpha)[None, :] + _log_normal(x, mu, sd)
        lse = _logsumexp(logp)
        if not np.isfinite(lse).all():
            raise DegenerateFitError("a sample has zero likelihood under every component")
        return float(np.dot(w, lse)), np.exp(logp - lse[:, None])

    ll, resp = loglik_and_resp(alpha, mu, sd)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        wr = resp * w[:, None]
        nk = wr.sum(axis=0)
        if (nk <= 1e-12 * total).any():
            raise DegenerateFitError("a component lost all responsibility")
        alpha = nk / total
        alpha /= alpha.sum()
        mu = (wr * x[:, None]).sum(axis=0) / nk
        var = (wr * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / nk
        sd = np.sqrt(np.maximum(var, variance_floor))

        new_ll, resp = loglik_and_resp(alpha, mu, sd)
        if callback is not None:
            callback(it, alpha.copy(), mu.copy(), sd.copy(), new_ll)
        done = abs(new_ll - ll) < tol * max(abs(ll), 1e-300)
        ll = new_ll
        if done:
            converged = True
            break

    order = np.argsort(mu, kind="stable")
    comps = tuple(GaussianComponent(float(alpha[i]), float(mu[i]), float(sd[i])) for i in order)
    return GaussianMixture(comps, ll, total, converged, it)


def em_fit(points: Sequence[JndPoint], init: InitialParams, **kwargs) -> GaussianMixture:
    x, w = points_to_arrays(points)
    return em_arrays(x, w, init, **kwargs)


def point_mass_fit(x, w, variance_floor: float = VARIANCE_FLOOR) -> GaussianMixture:
    """Single component at the lone support value with the floor stddev."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    sd = math.sqrt(variance_floor)
    ll = mixture_log_likelihood(x, w, [1.0], [x[0]], [sd])
    return GaussianMixture((GaussianComponent(1.0, float(x[0]), sd),), ll, float(w.sum()), True, 0)


def select_model(
    group: QfGroup | Sequence[JndPoint],
    max_components: int,
    variance_floor: float = VARIANCE_FLOOR,
    **em_kwargs,
) -> FitReport:
    """Fit N = 1..max_components and keep the lowest-BIC mixture.

    N values that cannot be initialised (too few separated bins or too
    little mass) or that collapse during EM are recorded as skipped.
    """
    if max_components < 1:
        raise ValueError("max_components must be >= 1")
    points = group.points if isinstance(group, QfGroup) else tuple(group)
    if not points:
        return FitReport((), EMPTY_MIXTURE)
    x, w = points_to_arrays(points)
    if len(x) == 1:
        mix = point_mass_fit(x, w, variance_floor)
        return FitReport((CandidateFit(1, mix.bic, True, 0),), mix, {1: mix})

    hist = build_histogram(points)
    candidates = []
    fits = {}
    for n in range(1, max_components + 1):
        try:
            init = init_params(hist, n)
            mix = em_arrays(x, w, init, variance_floor=variance_floor, **em_kwargs)
        except (InsufficientSupportError, DegenerateFitError) as e:
            candidates.append(CandidateFit(n, None, False, 0, skipped=str(e)))
            continue
        fits[n] = mix
        candidates.append(CandidateFit(n, mix.bic, mix.converged, mix.iterations))
    if not fits:
        raise DegenerateFitError("no component count could be fitted")
    best = min(fits, key=lambda n: (fits[n].bic, n))
    return FitReport(tuple(candidates), fits[best], fits)
