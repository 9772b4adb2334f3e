"""Synthetic subjects answering the bisection JND protocol."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import QF_MAX, QF_MIN, ImageJndSet, SubjectRecord

DEFAULT_LO = 5


@dataclass(frozen=True)
class LatentSubject:
    subject_id: str
    latent_jumps: tuple[int, ...]
    flip_probability: float = 0.0

    def __post_init__(self):
        j = self.latent_jumps
        if any(b <= a for a, b in zip(j, j[1:])):
            raise ValueError(f"{self.subject_id}: latent jumps must be strictly ascending")
        if j and not (QF_MIN <= j[0] and j[-1] <= QF_MAX):
            raise ValueError(f"{self.subject_id}: latent jumps outside {QF_MIN}..{QF_MAX}")
        if not 0.0 <= self.flip_probability < 0.5:
            raise ValueError(f"flip_probability must be in [0, 0.5), got {self.flip_probability}")


class ComparisonOracle:
    """Answers "noticeably different?" for a pair of QFs.

    Two QFs differ iff a latent jump lies in (min, max]; each answer is
    flipped independently with the subject's flip probability.
    """

    def __init__(self, subject: LatentSubject, seed: int | None = 0):
        self.subject = subject
        self._jumps = np.array(subject.latent_jumps, dtype=int)
        self._rng = np.random.default_rng(seed)
        self.n_comparisons = 0

    def truth(self, qf_a: int, qf_b: int) -> bool:
        a, b = min(qf_a, qf_b), max(qf_a, qf_b)
        return bool(((self._jumps > a) & (self._jumps <= b)).any())

    def __call__(self, qf_a: int, qf_b: int) -> bool:
        self.n_comparisons += 1
        answer = self.truth(qf_a, qf_b)
        p = self.subject.flip_probability
        if p > 0 and self._rng.random() < p:
            answer = not answer
        return answer


def bisection_search(oracle, lo: int = DEFAULT_LO, hi: int = QF_MAX) -> list[int]:
    """Locate JND points in (lo, hi] by recursive interval halving.

    Starts from the (worst, best) pair.  An interval whose endpoints look
    alike is dropped; one that differs is halved at the floor midpoint and
    both halves are compared.  A differing unit interval ``[a, a+1]``
    records a JND at ``a + 1``.  If a differing interval has two halves
    that both look alike (possible only with response noise) the search
    stops there and records the split point.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo}, {hi}")
    found: set[int] = set()
    # stack of (a, b) intervals already judged different
    stack = [(lo, hi)] if oracle(lo, hi) else []
    while stack:
        a, b = stack.pop()
        if b - a == 1:
            found.add(b)
            continue
        m = (a + b) // 2
        left = oracle(a, m)
        right = oracle(m, b)
        if not left and not right:
            found.add(m)
            continue
        # push right first so the lower half is explored first
        if right:
            stack.append((m, b))
        if left:
            stack.append((a, m))
    return sorted(found)


def comparison_budget(n_jumps: int, lo: int = DEFAULT_LO, hi: int = QF_MAX) -> int:
    """Worst-case comparison count of ``bisection_search`` for a noiseless subject.

    One initial comparison plus two per differing interval longer than one
    QF; each jump lies under at most ceil(log2(hi - lo)) such intervals.
    """
    depth = math.ceil(math.log2(hi - lo)) if hi - lo > 1 else 0
    return 1 + 2 * n_jumps * depth


@dataclass
class PanelResult:
    image: ImageJndSet
    comparisons: dict[str, int] = field(default_factory=dict)
    truth: dict[str, list[int]] = field(default_factory=dict)


def simulate_panel(
    subjects: Sequence[LatentSubject],
    seed: int = 0,
    lo: int = DEFAULT_LO,
    hi: int = QF_MAX,
    image_id: str = "sim",
) -> PanelResult:
    """Run the bisection protocol for every subject; subject i uses seed + i.

    Subjects who report no JND at all are left out of the image set.
    """
    if not subjects:
        raise ValueError("need at least one subject")
    records = []
    result = PanelResult(image=None)
    for i, subj in enumerate(subjects):
        oracle = ComparisonOracle(subj, seed + i)
        found = bisection_search(oracle, lo, hi)
        result.comparisons[subj.subject_id] = oracle.n_comparisons
        result.truth[subj.subject_id] = [j for j in subj.latent_jumps if lo < j <= hi]
        if found:
            records.append(SubjectRecord.from_qfs(subj.subject_id, found))
    result.image = ImageJndSet(image_id, tuple(records))
    return result


def jittered_subjects(
    shared_jumps: Sequence[int],
    n_subjects: int,
    rng: np.random.Generator,
    jitter: int = 2,
    detect_probability: float | Sequence[float] = 1.0,
    flip_probability: float = 0.0,
    lo: int = DEFAULT_LO,
    hi: int = QF_MAX,
    jitter_dist: str = "uniform",
) -> list[LatentSubject]:
    """Subjects whose latent jumps are shared jumps moved by up to +-jitter QF.

    ``jitter_dist`` is ``"uniform"`` (integers in [-jitter, jitter]) or
    ``"normal"`` (rounded N(0, (jitter/2)^2), clipped to +-jitter).  Each
    shared jump is perceived independently with ``detect_probability``
    (scalar or one value per jump).  Jittered jumps that collide are merged.
    """
    if jitter_dist not in ("uniform", "normal"):
        raise ValueError(f"unknown jitter_dist {jitter_dist!r}")
    shared = list(shared_jumps)
    p_detect = np.broadcast_to(np.asarray(detect_probability, dtype=float), (len(shared),))
    out = []
    for s in range(n_subjects):
        jumps = set()
        for q, p in zip(shared, p_detect):
            if rng.random() >= p:
                continue
            if jitter_dist == "uniform":
                d = int(rng.integers(-jitter, jitter + 1))
            else:
                d = int(np.clip(np.rint(rng.normal(0.0, jitter / 2)), -jitter, jitter))
            j = int(q) + d
            jumps.add(min(max(j, lo + 1), hi))
        out.append(LatentSubject(f"s{s + 1:02d}", tuple(sorted(jumps)), flip_probability))
    return out


def panel_from_config(cfg: dict) -> list[tuple[str, list[LatentSubject], list[int] | None]]:
    """Build (image_id, subjects, shared_jumps) triples from a simulator config.

    Accepted shapes: a top-level ``subjects`` list for a single image, or an
    ``images`` list whose entries carry either ``subjects`` (explicit
    ``jumps`` per subject) or a ``generator`` block.  Generator keys:
    ``shared_jumps`` (omit for a random draw), ``n_subjects``, ``jitter``,
    ``jitter_dist`` and ``detect_probability`` (number, list, or
    ``"falling"``).
    """
    flip = float(cfg.get("flip_probability", 0.0))
    lo = int(cfg.get("lo", DEFAULT_LO))
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    images = cfg.get("images")
    if images is None:
        if "subjects" not in cfg:
            raise ValueError("config needs 'subjects' or 'images'")
        images = [{"image_id": cfg.get("image_id", "sim"), "subjects": cfg["subjects"]}]
    out = []
    for k, img in enumerate(images):
        image_id = str(img.get("image_id", f"sim{k + 1:03d}"))
        image_flip = float(img.get("flip_probability", flip))
        shared = None
        if "generator" in img:
            g = img["generator"]
            shared = [int(q) for q in g["shared_jumps"]] if "shared_jumps" in g else random_shared_jumps(rng)
            detect = g.get("detect_probability", 1.0)
            if detect == "falling":
                detect = falling_detection(shared)
            subjects = jittered_subjects(
                shared,
                int(g.get("n_subjects", 20)),
                rng,
                jitter=int(g.get("jitter", 2)),
                detect_probability=detect,
                flip_probability=image_flip,
                lo=lo,
                jitter_dist=str(g.get("jitter_dist", "uniform")),
            )
        elif "subjects" in img:
            subjects = [
                LatentSubject(
                    str(s.get("subject_id", f"s{i + 1:02d}")),
                    tuple(sorted(int(j) for j in s["jumps"])),
                    float(s.get("flip_probability", image_flip)),
                )
                for i, s in enumerate(img["subjects"])
            ]
        else:
            raise ValueError(f"image {image_id}: needs 'subjects' or 'generator'")
        if not subjects:
            raise ValueError(f"image {image_id}: no subjects")
        out.append((image_id, subjects, shared))
    return out


def random_shared_jumps(rng: np.random.Generator, n_min: int = 5, n_max: int = 7,
                        qf_range: tuple[int, int] = (12, 95), min_gap: int = 8) -> list[int]:
    """Draw a sorted set of well separated shared JND positions."""
    n = int(rng.integers(n_min, n_max + 1))
    pool = np.arange(qf_range[0], qf_range[1] + 1)
    while True:
        jumps = np.sort(rng.choice(pool, n, replace=False))
        if np.all(np.diff(jumps) >= min_gap):
            return [int(j) for j in jumps]


def falling_detection(jumps: Sequence[int]) -> list[float]:
    """Detection probability that drops from 1 at low QF to 0.4 near QF 100."""
    return [float(np.clip(1.1 - 0.6 * (q - 10) / 90, 0.4, 1.0)) for q in jumps]


def desk_panel(seed: int, n_subjects: int = 20, flip_probability: float = 0.05,
               jitter: int = 2, lo: int = DEFAULT_LO, image_id: str | None = None) -> PanelResult:
    """One synthetic image: random shared jumps, Gaussian jitter, sparse high-QF detections."""
    rng = np.random.default_rng(seed)
    shared = random_shared_jumps(rng)
    subjects = jittered_subjects(
        shared, n_subjects, rng, jitter, falling_detection(shared), flip_probability, lo, jitter_dist="normal"
    )
    result = simulate_panel(subjects, seed=seed, lo=lo, image_id=image_id or f"desk{seed}")
    result.truth["shared"] = shared
    return result
