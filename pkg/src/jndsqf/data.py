"""JND observations: domain types, ingestion and QF histograms."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

QF_MIN = 1
QF_MAX = 100
N_BINS = QF_MAX - QF_MIN + 1

CSV_HEADER = ("image_id", "subject_id", "jnd_qf")


class IngestError(ValueError):
    """Raised for malformed or invalid JND sample input."""


@dataclass(frozen=True)
class JndPoint:
    qf: int
    weight: float = 1.0

    def __post_init__(self):
        if isinstance(self.qf, bool) or not isinstance(self.qf, (int, np.integer)):
            raise ValueError(f"qf must be an integer, got {self.qf!r}")
        if not QF_MIN <= self.qf <= QF_MAX:
            raise ValueError(f"qf {self.qf} outside {QF_MIN}..{QF_MAX}")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    points: tuple[JndPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError(f"subject {self.subject_id!r} has no JND points")
        qfs = [p.qf for p in self.points]
        if any(b <= a for a, b in zip(qfs, qfs[1:])):
            raise ValueError(f"subject {self.subject_id!r}: points must be strictly increasing in qf")

    @classmethod
    def from_qfs(cls, subject_id: str, qfs: Iterable[int]) -> "SubjectRecord":
        return cls(subject_id, tuple(JndPoint(int(q)) for q in sorted(qfs)))

    @property
    def qfs(self) -> list[int]:
        return [p.qf for p in self.points]


@dataclass(frozen=True)
class ImageJndSet:
    image_id: str
    subjects: tuple[SubjectRecord, ...]

    def __post_init__(self):
        ids = [s.subject_id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"image {self.image_id!r}: duplicate subject ids")

    def points(self) -> list[JndPoint]:
        """All raw (unweighted) points, subject by subject."""
        return [p for s in self.subjects for p in s.points]

    @property
    def n_points(self) -> int:
        return sum(len(s.points) for s in self.subjects)


@dataclass(frozen=True)
class QfHistogram:
    """Mass per integer QF; ``mass[qf - 1]`` holds the bin for ``qf``."""

    mass: np.ndarray
    total_mass: float = field(default=None)

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (N_BINS,):
            raise ValueError(f"histogram needs {N_BINS} bins, got shape {mass.shape}")
        if (mass < 0).any():
            raise ValueError("histogram bins must be non-negative")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "total_mass", float(mass.sum()))

    def __getitem__(self, qf: int) -> float:
        return float(self.mass[qf - QF_MIN])

    def positive_bins(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0) + QF_MIN


def build_histogram(points: Iterable[JndPoint]) -> QfHistogram:
    mass = np.zeros(N_BINS)
    for p in points:
        mass[p.qf - QF_MIN] += p.weight
    return QfHistogram(mass)


def subject_weighting(image: ImageJndSet) -> list[JndPoint]:
    """Weight every point of a subject by 1/(that subject's JND count)."""
    out = []
    for s in image.subjects:
        w = 1.0 / len(s.points)
        out.extend(JndPoint(p.qf, w) for p in s.points)
    return out


def points_to_arrays(points: Iterable[JndPoint]) -> tuple[np.ndarray, np.ndarray]:
    """Collapse points to distinct QF values with summed weights."""
    hist = build_histogram(points)
    qfs = hist.positive_bins()
    return qfs.astype(float), hist.mass[qfs - QF_MIN].copy()


# --- ingestion -----------------------------------------------------------

class _Collector:
    def __init__(self):
        self.images: dict[str, dict[str, set[int]]] = {}

    def add(self, image_id: str, subject_id: str, qf: int, where: str):
        subjects = self.images.setdefault(image_id, {})
        qfs = subjects.setdefault(subject_id, set())
        if qf in qfs:
            raise IngestError(
                f"{where}: duplicate JND point (image={image_id!r}, subject={subject_id!r}, qf={qf})"
            )
        qfs.add(qf)

    def result(self) -> list[ImageJndSet]:
        return [
            ImageJndSet(img, tuple(SubjectRecord.from_qfs(sid, q) for sid, q in subs.items()))
            for img, subs in self.images.items()
        ]


def _parse_qf(raw, where: str) -> int:
    if isinstance(raw, bool):
        raise IngestError(f"{where}: qf must be an integer, got {raw!r}")
    if isinstance(raw, str):
        raw = raw.strip()
        try:
            qf = int(raw)
        except ValueError:
            raise IngestError(f"{where}: qf must be an integer, got {raw!r}") from None
    elif isinstance(raw, int):
        qf = raw
    elif isinstance(raw, float) and raw.is_integer():
        qf = int(raw)
    else:
        raise IngestError(f"{where}: qf must be an integer, got {raw!r}")
    if not QF_MIN <= qf <= QF_MAX:
        raise IngestError(f"{where}: qf {qf} outside {QF_MIN}..{QF_MAX}")
    return qf


def _ingest_csv(text: str) -> list[ImageJndSet]:
    col = _Collector()
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = tuple(c.strip() for c in row)
            if header != CSV_HEADER:
                raise IngestError(f"line {line}: expected header {','.join(CSV_HEADER)}, got {','.join(row)}")
            continue
        if len(row) != 3:
            raise IngestError(f"line {line}: expected 3 fields, got {len(row)}")
        image_id, subject_id = row[0].strip(), row[1].strip()
        if not image_id or not subject_id:
            raise IngestError(f"line {line}: empty image_id or subject_id")
        col.add(image_id, subject_id, _parse_qf(row[2], f"line {line}"), f"line {line}")
    return col.result()


def _ingest_json(text: str) -> list[ImageJndSet]:
    if not text.strip():
        return []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise IngestError(f"line {e.lineno}: invalid JSON ({e.msg})") from None
    if not isinstance(data, list):
        raise IngestError("JSON input must be an array of objects")
    col = _Collector()
    for i, rec in enumerate(data):
        where = f"record {i}"
        if not isinstance(rec, dict) or not {"image_id", "subject_id", "jnd_qfs"} <= rec.keys():
            raise IngestError(f"{where}: expected object with image_id, subject_id, jnd_qfs")
        if not isinstance(rec["jnd_qfs"], list):
            raise IngestError(f"{where}: jnd_qfs must be a list")
        image_id, subject_id = str(rec["image_id"]), str(rec["subject_id"])
        for raw in rec["jnd_qfs"]:
            col.add(image_id, subject_id, _parse_qf(raw, where), where)
    return col.result()


def ingest(source, fmt: str = "csv") -> list[ImageJndSet]:
    """Parse CSV or JSON JND samples into one ImageJndSet per image.

    ``source`` may be text, bytes or a readable (text or binary) stream.
    Images and subjects keep their order of first appearance.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8-sig")
    if fmt == "csv":
        return _ingest_csv(source)
    if fmt == "json":
        return _ingest_json(source)
    raise ValueError(f"unknown format {fmt!r}")


def export_csv(images: Iterable[ImageJndSet], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for img in images:
        for s in img.subjects:
            for p in s.points:
                w.writerow((img.image_id, s.subject_id, p.qf))


def export_json(images: Iterable[ImageJndSet], out: TextIO) -> None:
    recs = [
        {"image_id": img.image_id, "subject_id": s.subject_id, "jnd_qfs": s.qfs}
        for img in images
        for s in img.subjects
    ]
    json.dump(recs, out, indent=1)
    out.write("\n")


def dumps(images: Iterable[ImageJndSet], fmt: str = "csv") -> str:
    buf = io.StringIO()
    (export_csv if fmt == "csv" else export_json)(images, buf)
    return buf.getvalue()
