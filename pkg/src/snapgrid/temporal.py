"""Local-time rhythms: hourly profiles, night uplift, and weekly clustering.

All bucketing happens in each city's own IANA timezone, so "18:00" means
evening in that city regardless of where it sits on the globe. Weekly
activity vectors (168 hour-of-week fractions, Monday 00:00 first) feed a
small from-scratch k-means so cities with similar rhythms group together;
silhouette scores and an elbow curve guide the choice of k, and a 2-D PCA
projection provides eyes on the result.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidKError,
    ShapeError,
    UndefinedCorrelationError,
    UndefinedSilhouetteError,
    UndefinedUpliftError,
)
from .records import SnapRecord, to_local_time

HOURS_PER_WEEK = 168


@dataclass(frozen=True)
class HourlyProfile:
    """Counts of records per local hour of day (24 bins)."""

    city_id: str
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (24,):
            raise ShapeError(f"hourly profile needs 24 bins, got shape {counts.shape}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def fractions(self) -> np.ndarray:
        if self.total == 0:
            raise EmptyInputError("profile has no records")
        return self.counts / self.total


def hourly_profile(records: Sequence[SnapRecord], tz_id: str, city_id: str = "") -> HourlyProfile:
    """Bucket records by their local wall-clock hour."""
    counts = np.zeros(24, dtype=np.int64)
    for rec in records:
        counts[to_local_time(rec.ts_utc, tz_id).hour] += 1
    if not city_id and records:
        city_id = records[0].city_id
    return HourlyProfile(city_id=city_id, counts=counts)


@dataclass(frozen=True)
class NightWindow:
    """Local-time window for "night", wrapping midnight by default (18:00-01:59)."""

    start_hour: int = 18
    end_hour: int = 2  # exclusive

    def __post_init__(self):
        for h in (self.start_hour, self.end_hour):
            if not 0 <= h <= 23:
                raise ValueError(f"hour {h} outside 0..23")

    def contains(self, hour: int) -> bool:
        if self.start_hour < self.end_hour:
            return self.start_hour <= hour < self.end_hour
        return hour >= self.start_hour or hour < self.end_hour

    def hours(self) -> tuple[int, ...]:
        return tuple(h for h in range(24) if self.contains(h))


def night_uplift(profile: HourlyProfile, window: NightWindow = NightWindow()) -> float:
    """Percent excess of mean in-window over mean out-of-window hourly counts.

    100.0 means night hours average twice the day hours. Undefined (raises)
    when the out-of-window mean is zero.
    """
    inside = np.array([window.contains(h) for h in range(24)])
    if inside.all() or not inside.any():
        raise UndefinedUpliftError("window covers all or none of the day")
    mean_in = float(profile.counts[inside].mean())
    mean_out = float(profile.counts[~inside].mean())
    if mean_out == 0:
        raise UndefinedUpliftError("no activity outside the window; uplift undefined")
    return (mean_in / mean_out - 1.0) * 100.0


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise UndefinedCorrelationError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc**2).sum() * (yc**2).sum())
    if denom == 0:
        raise UndefinedCorrelationError("zero variance on at least one side")
    return float((xc * yc).sum() / denom)


def paired_hourly_counts(
    records_a: Iterable[SnapRecord],
    records_b: Iterable[SnapRecord],
    start: int,
    end: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned per-UTC-hour counts for two record streams over [start, end).

    Every hour in the window gets a bin even when both counts are zero,
    so the two vectors always line up for correlation.
    """
    if end <= start:
        raise ValueError("window must have positive duration")
    first = start // 3600
    last = (end - 1) // 3600
    n_hours = last - first + 1
    a = np.zeros(n_hours, dtype=np.int64)
    b = np.zeros(n_hours, dtype=np.int64)
    for out, records in ((a, records_a), (b, records_b)):
        for rec in records:
            if start <= rec.ts_utc < end:
                out[rec.ts_utc // 3600 - first] += 1
    return a, b


def week_vector(records: Sequence[SnapRecord], tz_id: str) -> np.ndarray:
    """168 hour-of-week activity fractions; index 0 is Monday 00:00 local."""
    counts = np.zeros(HOURS_PER_WEEK, dtype=np.int64)
    for rec in records:
        local = to_local_time(rec.ts_utc, tz_id)
        counts[local.weekday() * 24 + local.hour] += 1
    total = counts.sum()
    if total == 0:
        raise EmptyInputError("no records to build a week vector from")
    return counts / total


def week_vectors(
    records_by_city: Mapping[str, Sequence[SnapRecord]],
    tz_by_city: Mapping[str, str],
) -> tuple[np.ndarray, list[str]]:
    """Stack per-city week vectors; cities with no activity are dropped with a warning."""
    rows = []
    kept = []
    for city_id in records_by_city:
        try:
            rows.append(week_vector(records_by_city[city_id], tz_by_city[city_id]))
        except EmptyInputError:
            warnings.warn(f"city {city_id!r} has no activity; dropped from week vectors")
            continue
        kept.append(city_id)
    if not rows:
        raise EmptyInputError("no cities with activity")
    return np.vstack(rows), kept


# ---------------------------------------------------------------------------
# k-means


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...] = field(default=(), repr=False)


def _squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) matrix of squared euclidean distances
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = rng.integers(n)
    centers[0] = X[first]
    closest_sq = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest_sq.sum()
        if total == 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest_sq / total)
        centers[j] = X[idx]
        closest_sq = np.minimum(closest_sq, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int, rng: np.random.Generator):
    history = []
    labels = np.zeros(X.shape[0], dtype=np.int64)
    for it in range(1, max_iter + 1):
        d2 = _squared_distances(X, centers)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(X.shape[0]), labels].sum())
        history.append(inertia)
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            members = X[labels == j]
            if len(members) == 0:
                # revive the dead cluster at the point worst served right now
                farthest = d2[np.arange(X.shape[0]), labels].argmax()
                new_centers[j] = X[farthest]
            else:
                new_centers[j] = members.mean(axis=0)
        if np.allclose(new_centers, centers):
            return labels, centers, inertia, it, history
        centers = new_centers
    d2 = _squared_distances(X, centers)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    history.append(inertia)
    return labels, centers, inertia, max_iter, history


def kmeans(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    n_restarts: int = 10,
    max_iter: int = 300,
) -> ClusterResult:
    """Seeded k-means (k-means++ init, Lloyd iterations, best of ``n_restarts``)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-d data matrix, got ndim={X.ndim}")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InvalidKError(f"k={k} outside 1..{n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        centers0 = _kmeans_pp_init(X, k, rng)
        labels, centers, inertia, n_iter, history = _lloyd(X, centers0, max_iter, rng)
        if best is None or inertia < best.inertia:
            best = ClusterResult(
                labels=labels,
                centers=centers,
                inertia=inertia,
                n_iter=n_iter,
                inertia_history=tuple(history),
            )
    return best


def silhouette(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette coefficient; points in singleton clusters score 0."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    n = X.shape[0]
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise UndefinedSilhouetteError("silhouette needs at least 2 clusters")
    if len(uniq) >= n:
        raise UndefinedSilhouetteError("silhouette undefined when every point is its own cluster")
    dists = np.sqrt(_squared_distances(X, X))
    scores = np.zeros(n)
    sizes = {int(c): int((labels == c).sum()) for c in uniq}
    for i in range(n):
        own = labels[i]
        if sizes[int(own)] == 1:
            scores[i] = 0.0
            continue
        same = labels == own
        a = dists[i, same].sum() / (sizes[int(own)] - 1)
        b = min(dists[i, labels == c].mean() for c in uniq if c != own)
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def elbow_curve(X: np.ndarray, k_values: Sequence[int], seed: int = 0) -> list[tuple[int, float]]:
    """Inertia of the best k-means fit for each candidate k (for elbow plots)."""
    return [(k, kmeans(X, k, seed=seed).inertia) for k in k_values]


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray


def embed_2d(X: np.ndarray) -> Embedding:
    """Project rows onto the top two principal components (SVD of centered data).

    Each component's sign is fixed so its largest-magnitude loading is
    positive, making embeddings reproducible across platforms.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError("need a 2-d matrix with at least 2 rows")
    centered = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for j in range(components.shape[0]):
        pivot = np.abs(components[j]).argmax()
        if components[j, pivot] < 0:
            components[j] = -components[j]
    coords = centered @ components.T
    var = s**2
    total = var.sum()
    ratio = var[:2] / total if total > 0 else np.zeros(min(2, len(var)))
    return Embedding(coords=coords, components=components, explained_variance_ratio=ratio)
