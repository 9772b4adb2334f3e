import itertools

import numpy as np
import pytest

from jndsqf.data import ImageJndSet, JndPoint, SubjectRecord
from jndsqf.kmethod import TooFewValuesError, choose_k, kmeans_1d, kmethod_fit, weighted_median


def image(*panels):
    return ImageJndSet("x", tuple(SubjectRecord.from_qfs(f"s{i}", q) for i, q in enumerate(panels)))


def test_choose_k():
    assert choose_k(image([10, 20, 30, 40], [1, 2, 3, 4, 5, 6])) == 5
    assert choose_k(image([10, 20, 30], [1, 2, 3, 4])) == 4  # 3.5 rounds up
    assert choose_k(image([1, 2, 3, 4, 5, 6, 7])) == 7
    assert choose_k(image([1, 2], [1, 2, 3, 4, 5])) == 4  # 3.5
    assert choose_k(image([1], [1, 2], [1, 2, 3, 4, 5])) == 3  # 2.67


def test_kmeans_separable():
    x = np.array([10, 11, 12, 80, 81, 82], dtype=float)
    labels, centres, _ = kmeans_1d(x, np.ones(6), 2)
    assert labels.tolist() == [0, 0, 0, 1, 1, 1]
    np.testing.assert_allclose(centres, [11, 81])


def test_kmeans_saturation():
    x = np.array([5, 17, 33, 60], dtype=float)
    labels, centres, _ = kmeans_1d(x, np.ones(4), 4)
    assert sorted(labels.tolist()) == [0, 1, 2, 3]
    np.testing.assert_allclose(centres, x)


def test_kmeans_too_few_values():
    with pytest.raises(TooFewValuesError, match="lower k"):
        kmeans_1d(np.array([1.0, 1.0, 2.0]), np.ones(3), 3)


def _wcss(x, w, labels):
    total = 0.0
    for j in np.unique(labels):
        m = labels == j
        c = np.dot(w[m], x[m]) / w[m].sum()
        total += np.dot(w[m], (x[m] - c) ** 2)
    return total


def _lloyd_from(x, w, centres, iters=200):
    for _ in range(iters):
        labels = np.argmin(np.abs(x[:, None] - centres[None, :]), axis=1)
        for j in range(len(centres)):
            if (labels == j).any():
                centres[j] = np.dot(w[labels == j], x[labels == j]) / w[labels == j].sum()
    return labels


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_vs_random_restarts(seed):
    rng = np.random.default_rng(seed)
    x = np.rint(np.concatenate([rng.normal(m, 3, 30) for m in (15, 40, 62, 85)])).clip(1, 100)
    w = rng.uniform(0.1, 1.0, len(x))
    labels, _, _ = kmeans_1d(x, w, 4)
    ours = _wcss(x, w, labels)
    restarts = [_wcss(x, w, _lloyd_from(x, w, rng.choice(x, 4, replace=False).astype(float))) for _ in range(100)]
    assert ours <= max(restarts) + 1e-9
    perm = rng.permutation(len(x))
    labels_p, _, _ = kmeans_1d(x[perm], w[perm], 4)
    np.testing.assert_array_equal(labels_p, labels[perm])


def test_weighted_median():
    assert weighted_median([1, 2, 3], [1, 1, 1]) == 2
    # exact even split between 2 and 8: midpoint 5 is equidistant -> lower
    assert weighted_median([2, 8], [1, 1]) == 2
    assert weighted_median([2, 8], [1, 1.5]) == 8
    assert weighted_median([10, 20, 30, 40], [0.25, 0.25, 0.25, 0.25]) == 20


def test_kmethod_locations_are_cluster_medians():
    panels = [[20, 60], [21, 61], [22, 63], [20, 62], [23, 60]]
    model = kmethod_fit(image(*panels))
    assert model.k == 2
    assert [c.location for c in model.clusters] == [21, 61]
    assert sum(c.mass_fraction for c in model.clusters) == pytest.approx(1, abs=1e-9)


def test_kmethod_identical_points():
    model = kmethod_fit(image([50], [50], [50]))
    (c,) = model.clusters
    assert c.gauss_var == 0.25
    assert c.mass_fraction == 1.0
    assert c.location == 50


def test_kmethod_terms_and_determinism():
    rng = np.random.default_rng(2)
    panels = [sorted(set(int(q) for q in rng.normal([20, 45, 70], 2).round())) for _ in range(15)]
    a = kmethod_fit(image(*panels))
    b = kmethod_fit(image(*panels))
    assert a == b
    assert a.bic == pytest.approx(a.nll_term + a.complexity_term, abs=1e-9)
    assert a.n_free_params == 3 * a.k - 1
    assert a.n_samples == sum(len(p) for p in panels)
    locs = [c.location for c in a.clusters]
    assert locs == sorted(locs)
    observed = {q for p in panels for q in p}
    assert set(locs) <= observed
    d = a.to_dict()
    assert set(d) >= {"k", "clusters", "nll_term", "complexity_term", "bic"}
