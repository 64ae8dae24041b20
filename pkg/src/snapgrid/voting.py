"""Frame sampling, per-clip vote aggregation, and prediction evaluation.

A clip is classified by binarizing per-frame scores and folding the frame
labels into one clip label under a voting rule:

* ``single``   - positive when at least one frame is positive;
* ``majority`` - positive when strictly more than half the frames are;
* ``threshold``- positive when strictly more than p% of the frames are,
  for p in {10, 30, 50, 70, 90}.

All rules are strict (ties resolve negative), which makes them one
monotone family: single implies threshold(10) implies ... implies
threshold(90) on the positive side.

Frame scores normally come from an external per-frame classifier. The
:func:`reference_scorer` here is a deterministic logistic stand-in used
for plumbing tests and synthetic corpora, not a trained model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidDurationError,
    MissingCityError,
    ShapeError,
)
from .records import DRIVING, NON_DRIVING, SnapRecord

THRESHOLD_CHOICES = (10, 30, 50, 70, 90)
SAMPLING_STRATEGIES = ("every_30th", "random_per_second")
DEFAULT_FPS = 30


@dataclass(frozen=True)
class FrameScoreSeries:
    """Per-frame classifier scores for one clip."""

    snap_id: str
    scores: tuple[float, ...]
    sampling: str = "every_30th"
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.scores:
            raise EmptyInputError("frame score series must be nonempty")
        if self.sampling not in SAMPLING_STRATEGIES:
            raise ValueError(f"unknown sampling strategy {self.sampling!r}")
        for s in self.scores:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"frame score {s} outside [0, 1]")


@dataclass(frozen=True)
class VotingRule:
    kind: str
    threshold_pct: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("single", "majority", "threshold"):
            raise ValueError(f"unknown voting rule {self.kind!r}")
        if self.kind == "threshold":
            if self.threshold_pct not in THRESHOLD_CHOICES:
                raise ValueError(f"threshold_pct must be one of {THRESHOLD_CHOICES}, got {self.threshold_pct}")
        elif self.threshold_pct is not None:
            raise ValueError(f"threshold_pct only applies to threshold voting, not {self.kind!r}")

    @classmethod
    def single(cls) -> "VotingRule":
        return cls("single")

    @classmethod
    def majority(cls) -> "VotingRule":
        return cls("majority")

    @classmethod
    def threshold(cls, pct: int) -> "VotingRule":
        return cls("threshold", pct)


def sample_frame_indices(
    duration_s: float,
    fps: int = DEFAULT_FPS,
    strategy: str = "every_30th",
    seed: Optional[int] = None,
) -> np.ndarray:
    """Frame indices to score: one frame per whole second of the clip.

    ``every_30th`` takes the first frame of each second (0, fps, 2*fps,
    ...); ``random_per_second`` draws one uniform index from each
    second's frame block, reproducibly for a given seed. Clips shorter
    than one second still yield one frame.
    """
    if duration_s <= 0:
        raise InvalidDurationError(f"duration must be positive, got {duration_s}")
    if strategy not in SAMPLING_STRATEGIES:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    n_seconds = max(1, int(math.floor(duration_s)))
    blocks = np.arange(n_seconds, dtype=np.int64) * fps
    if strategy == "every_30th":
        return blocks
    rng = np.random.default_rng(seed)
    return blocks + rng.integers(0, fps, size=n_seconds)


def frame_label(score: float, cutoff: float = 0.5) -> str:
    """Binarize one frame score; strictly above the cutoff counts as driving."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    return DRIVING if score > cutoff else NON_DRIVING


def labels_from_scores(scores: Sequence[float], cutoff: float = 0.5) -> list[str]:
    return [frame_label(s, cutoff) for s in scores]


def aggregate_votes(frame_labels: Sequence[str], rule: VotingRule) -> str:
    """Fold per-frame labels into one clip label under the voting rule."""
    if len(frame_labels) == 0:
        raise EmptyInputError("cannot aggregate an empty label sequence")
    positive = sum(1 for lab in frame_labels if lab == DRIVING)
    fraction = positive / len(frame_labels)
    if rule.kind == "single":
        hit = positive >= 1
    elif rule.kind == "majority":
        hit = fraction > 0.5
    else:
        hit = fraction > rule.threshold_pct / 100.0
    return DRIVING if hit else NON_DRIVING


def classify_scores(scores: Sequence[float], rule: VotingRule, cutoff: float = 0.5) -> str:
    """Score sequence -> clip label: binarize then vote."""
    return aggregate_votes(labels_from_scores(scores, cutoff), rule)


def reference_scorer(frame_features: Sequence[float]) -> float:
    """Deterministic logistic squash of a fixed linear functional.

    Weights alternate in sign and decay harmonically (1, -1/2, 1/3, ...),
    so the score is strictly increasing in the first feature. A zero
    feature vector scores exactly 0.5.
    """
    features = np.asarray(frame_features, dtype=float)
    if features.size == 0:
        raise EmptyInputError("feature vector must be nonempty")
    weights = np.array([(-1.0) ** i / (i + 1) for i in range(features.size)])
    z = float(weights @ features)
    return 1.0 / (1.0 + math.exp(-z))


@dataclass(frozen=True)
class EvalReport:
    """Confusion-matrix metrics with the minor class treated as positive."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: tuple[int, int, int, int]  # (tp, fp, fn, tn)
    minor_class: str


def evaluate(predictions: Sequence[str], truths: Sequence[str], minor_class: str = DRIVING) -> EvalReport:
    """Accuracy/precision/recall/F1 of predictions against ground truth."""
    if len(predictions) != len(truths):
        raise ShapeError(f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths")
    if len(predictions) == 0:
        raise EmptyInputError("need at least one prediction")
    tp = fp = fn = tn = 0
    for pred, truth in zip(predictions, truths):
        if pred == minor_class:
            if truth == minor_class:
                tp += 1
            else:
                fp += 1
        else:
            if truth == minor_class:
                fn += 1
            else:
                tn += 1
    total = tp + fp + fn + tn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        accuracy=(tp + tn) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=(tp, fp, fn, tn),
        minor_class=minor_class,
    )


@dataclass(frozen=True)
class ExtentReport:
    """Share of driving clips per city and pooled, with a ranking."""

    per_city: dict[str, float]
    overall: float
    ranking: tuple[tuple[str, float], ...]  # (city_id, fraction), descending


def extent(records: Sequence[SnapRecord], cities: Optional[Sequence[str]] = None) -> ExtentReport:
    """Driving fraction per city and pooled over all records.

    When ``cities`` is given, every requested city must have at least one
    record.
    """
    if not records:
        raise EmptyInputError("need at least one classified record")
    driving: dict[str, int] = {}
    totals: dict[str, int] = {}
    for rec in records:
        if rec.label is None:
            raise ValueError(f"record {rec.id!r} is unlabeled")
        totals[rec.city_id] = totals.get(rec.city_id, 0) + 1
        if rec.label == DRIVING:
            driving[rec.city_id] = driving.get(rec.city_id, 0) + 1
    if cities is not None:
        for city in cities:
            if city not in totals:
                raise MissingCityError(f"no records for city {city!r}")
        totals = {c: totals[c] for c in cities}
    per_city = {c: driving.get(c, 0) / totals[c] for c in totals}
    pooled_total = sum(totals.values())
    pooled_driving = sum(driving.get(c, 0) for c in totals)
    ranking = tuple(sorted(per_city.items(), key=lambda kv: (-kv[1], kv[0])))
    return ExtentReport(
        per_city=per_city,
        overall=pooled_driving / pooled_total,
        ranking=ranking,
    )
