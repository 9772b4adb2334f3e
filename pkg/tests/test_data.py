import io
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jndsqf.data import (
    ImageJndSet,
    IngestError,
    JndPoint,
    QfHistogram,
    SubjectRecord,
    build_histogram,
    dumps,
    ingest,
    subject_weighting,
)


def test_csv_ingest_basic():
    text = "image_id,subject_id,jnd_qf\nimg6,s1,72\nimg6,s1,40\n"
    (img,) = ingest(text, "csv")
    assert img.image_id == "img6"
    assert len(img.subjects) == 1
    assert img.subjects[0].qfs == [40, 72]


def test_empty_file_is_empty_collection():
    assert ingest("", "csv") == []
    assert ingest(b"", "json") == []
    assert ingest("image_id,subject_id,jnd_qf\n", "csv") == []


def test_qf_zero_names_line():
    text = "image_id,subject_id,jnd_qf\nimg6,s1,40\nimg6,s2,0\n"
    with pytest.raises(IngestError, match="line 3"):
        ingest(text, "csv")


@pytest.mark.parametrize("bad", ["101", "4.5", "abc", ""])
def test_bad_qf_rejected(bad):
    with pytest.raises(IngestError, match="line 2"):
        ingest(f"image_id,subject_id,jnd_qf\nimg,s1,{bad}\n", "csv")


def test_duplicate_triple_rejected():
    text = "image_id,subject_id,jnd_qf\na,s1,40\na,s2,40\na,s1,40\n"
    with pytest.raises(IngestError, match=r"line 4.*image='a'.*subject='s1'.*qf=40"):
        ingest(text, "csv")


def test_malformed_row_and_header():
    with pytest.raises(IngestError, match="line 2"):
        ingest("image_id,subject_id,jnd_qf\na,s1\n", "csv")
    with pytest.raises(IngestError, match="line 1"):
        ingest("img,subj,qf\na,s1,3\n", "csv")


def test_json_ingest_and_errors():
    (img,) = ingest(b'[{"image_id": "x", "subject_id": "s", "jnd_qfs": [70, 20, 45]}]', "json")
    assert img.subjects[0].qfs == [20, 45, 70]
    with pytest.raises(IngestError, match="record 0"):
        ingest('[{"image_id": "x", "subject_id": "s", "jnd_qfs": [2.5]}]', "json")
    with pytest.raises(IngestError, match="duplicate"):
        ingest('[{"image_id": "x", "subject_id": "s", "jnd_qfs": [5, 5]}]', "json")
    with pytest.raises(IngestError, match="line 1"):
        ingest("[{", "json")


def test_ingest_accepts_streams():
    (img,) = ingest(io.BytesIO(b"image_id,subject_id,jnd_qf\na,s,9\n"), "csv")
    assert img.n_points == 1


def test_types_validate():
    with pytest.raises(ValueError):
        JndPoint(0)
    with pytest.raises(ValueError):
        JndPoint(50, 0.0)
    with pytest.raises(ValueError):
        SubjectRecord("s", ())
    with pytest.raises(ValueError):
        SubjectRecord("s", (JndPoint(5), JndPoint(5)))
    s = SubjectRecord.from_qfs("s", [3])
    with pytest.raises(ValueError):
        ImageJndSet("i", (s, s))


def test_histogram_counts():
    h = build_histogram([JndPoint(40), JndPoint(40), JndPoint(72)])
    assert h[40] == 2 and h[72] == 1 and h.total_mass == 3
    h = build_histogram([JndPoint(30, 0.5)])
    assert h[30] == 0.5 and h.total_mass == 0.5
    assert build_histogram([]).total_mass == 0


def test_histogram_matches_tally_for_panel():
    rng = np.random.default_rng(7)
    subjects = [SubjectRecord.from_qfs(f"s{i}", rng.choice(np.arange(1, 101), rng.integers(1, 8), replace=False))
                for i in range(20)]
    img = ImageJndSet("x", tuple(subjects))
    tally = Counter(q for s in subjects for q in s.qfs)
    h = build_histogram(img.points())
    for qf in range(1, 101):
        assert h[qf] == tally.get(qf, 0)
    assert h.total_mass == sum(tally.values())


def test_histogram_rejects_negative():
    m = np.zeros(100)
    m[3] = -1
    with pytest.raises(ValueError):
        QfHistogram(m)


@given(st.lists(st.tuples(st.integers(1, 100), st.floats(0.01, 10)), max_size=60), st.randoms())
def test_histogram_permutation_invariant(items, rnd):
    pts = [JndPoint(q, w) for q, w in items]
    shuffled = pts[:]
    rnd.shuffle(shuffled)
    a, b = build_histogram(pts), build_histogram(shuffled)
    np.testing.assert_allclose(a.mass, b.mass, rtol=1e-12, atol=1e-12)
    assert math.isclose(a.total_mass, math.fsum(w for _, w in items), rel_tol=1e-9, abs_tol=1e-12)


def test_subject_weighting():
    img = ImageJndSet("x", (
        SubjectRecord.from_qfs("a", [10, 20, 30, 40]),
        SubjectRecord.from_qfs("b", [50]),
    ))
    pts = subject_weighting(img)
    assert [p.weight for p in pts[:4]] == [0.25] * 4
    assert pts[4].weight == 1.0


def test_subject_weighting_total_mass():
    img = ImageJndSet("x", (
        SubjectRecord.from_qfs("a", [10, 20]),
        SubjectRecord.from_qfs("b", [10, 20, 30]),
        SubjectRecord.from_qfs("c", [1, 2, 3, 4, 5]),
    ))
    pts = subject_weighting(img)
    # per-subject sums are exact: 2*(1/2), 3*(1/3), 5*(1/5)
    assert math.fsum(p.weight for p in pts) == pytest.approx(3.0, abs=1e-12)


@given(st.lists(st.lists(st.integers(1, 100), min_size=1, max_size=12, unique=True), min_size=1, max_size=25))
def test_weighting_mass_equals_subject_count(panel):
    img = ImageJndSet("x", tuple(SubjectRecord.from_qfs(f"s{i}", q) for i, q in enumerate(panel)))
    pts = subject_weighting(img)
    assert math.fsum(p.weight for p in pts) == pytest.approx(len(panel), rel=1e-12)


@given(
    st.dictionaries(
        st.text("abcxyz019", min_size=1, max_size=4),
        st.dictionaries(st.text("pqrs", min_size=1, max_size=3),
                        st.lists(st.integers(1, 100), min_size=1, max_size=10, unique=True), min_size=1, max_size=5),
        max_size=4,
    ),
    st.sampled_from(["csv", "json"]),
)
def test_export_round_trip(raw, fmt):
    images = [ImageJndSet(i, tuple(SubjectRecord.from_qfs(s, q) for s, q in subs.items())) for i, subs in raw.items()]
    assert ingest(dumps(images, fmt), fmt) == images
