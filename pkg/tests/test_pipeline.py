import math

import numpy as np
import pytest

from jndsqf.data import ImageJndSet, SubjectRecord
from jndsqf.gmm import mixture_log_likelihood
from jndsqf.pipeline import compare_image, gmethod_fit
from jndsqf.simulate import LatentSubject, desk_panel, simulate_panel


def test_noiseless_panel_end_to_end():
    res = simulate_panel([LatentSubject(f"s{i}", (30, 55, 80)) for i in range(20)])
    g = gmethod_fit(res.image)
    assert [round(j.position) for j in g.sqf.jumps] == [30, 55, 80]
    n_selected = sum(r.selected.n_components for r in g.reports.values())
    assert len(g.sqf.jumps) == n_selected


def test_jump_count_equals_selected_components():
    for seed in range(10):
        g = gmethod_fit(desk_panel(seed, flip_probability=0.0).image)
        means = sorted(m for r in g.reports.values() for m in r.selected.means)
        close = sum(1 for a, b in zip(means, means[1:]) if b - a <= 0.5)
        assert len(g.sqf.jumps) == len(means) - close


def test_image_bic_is_combined_mixture_on_raw_samples():
    img = desk_panel(3).image
    g = gmethod_fit(img)
    qfs = np.array([p.qf for p in img.points()], dtype=float)
    # direct evaluation over every raw sample, no collapsing
    ll = mixture_log_likelihood(qfs, np.ones_like(qfs), g.combined.weights, g.combined.means, g.combined.stddevs)
    assert g.terms.log_likelihood == pytest.approx(ll, rel=1e-12)
    assert g.terms.n_samples == img.n_points
    assert g.terms.n_free_params == 3 * g.combined.n_components - 1
    assert g.combined.weights.sum() == pytest.approx(1, abs=1e-9)


def test_compare_table_layout():
    c = compare_image(desk_panel(4).image)
    rows = c.table_rows()
    assert [r["method"] for r in rows] == ["K", "G"]
    for r in rows:
        assert r["bic"] == pytest.approx(r["nll_term"] + r["complexity_term"], abs=1e-9)
    assert rows[0]["n_samples"] == rows[1]["n_samples"]


def test_degenerate_single_point_image():
    img = ImageJndSet("one", (SubjectRecord.from_qfs("s", [42]),))
    c = compare_image(img)
    assert len(c.g.sqf.jumps) == 1 and len(c.k_sqf.jumps) == 1
