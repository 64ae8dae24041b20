"""Per-tile count aggregation and spatial concentration fitting.

Whether driving clips cluster in a few hotspots or spread evenly over a
city is decided by fitting four candidate distributions to the positive
per-tile counts by closed-form maximum likelihood and comparing them with
BIC (k ln n - 2 loglik, lower is better):

* exponential   rate = 1 / mean                       (1 parameter)
* normal        mean, population std                  (2 parameters)
* log-normal    normal fit of ln x                    (2 parameters)
* power law     continuous Hill estimator,
                alpha = 1 + n / sum ln(x / x_min)     (1 parameter, x_min fixed)

Counts are integers but the likelihoods are continuous; for the count
magnitudes seen per tile this is an adequate, fast approximation. The
power-law lower cutoff defaults to the smallest positive count (no
cutoff search), which keeps all four fits comparable on identical data.
Zero-count tiles never enter any fit, since the log-normal and power-law
densities are undefined at zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateSampleError, InsufficientFitsError, ShapeError
from .geo import TileGrid, TileIndex, locate
from .records import SnapRecord

FAMILIES = ("power_law", "normal", "log_normal", "exponential")

# Free parameters counted by BIC per family (power-law x_min is fixed, not free).
N_PARAMS = {"power_law": 1, "normal": 2, "log_normal": 2, "exponential": 1}


@dataclass(frozen=True, eq=False)
class TileCountVector:
    """Counts of located records per active tile of one city's grid."""

    city_id: str
    tiles: tuple[TileIndex, ...]
    counts: np.ndarray  # int, aligned with tiles
    out_of_grid: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.shape != (len(self.tiles),):
            raise ShapeError(f"counts shape {counts.shape} does not match {len(self.tiles)} tiles")

    @property
    def positive_counts(self) -> np.ndarray:
        return self.counts[self.counts >= 1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def tile_counts(records: Sequence[SnapRecord], grid: TileGrid, city_id: Optional[str] = None) -> TileCountVector:
    """Count records per active tile; records locating nowhere go to an out-of-grid tally.

    When ``city_id`` is given, records from other cities are ignored.
    """
    tiles = tuple(grid.active_tiles())
    index_of = {t: i for i, t in enumerate(tiles)}
    counts = np.zeros(len(tiles), dtype=np.int64)
    out = 0
    for rec in records:
        if city_id is not None and rec.city_id != city_id:
            continue
        idx = locate(rec.location, grid)
        if idx is None:
            out += 1
        else:
            counts[index_of[idx]] += 1
    if city_id is None:
        city_id = records[0].city_id if records else ""
    return TileCountVector(city_id=city_id, tiles=tiles, counts=counts, out_of_grid=out)


@dataclass(frozen=True)
class FittedDistribution:
    family: str
    params: dict[str, float]
    log_likelihood: float
    bic: float
    n: int


def log_likelihood(family: str, x: Sequence[float], params: dict[str, float]) -> float:
    """Log density sum for a family at arbitrary (not necessarily MLE) parameters."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if family == "exponential":
        lam = params["lam"]
        return n * math.log(lam) - lam * float(x.sum())
    if family == "normal":
        mu, sigma = params["mu"], params["sigma"]
        return -0.5 * n * math.log(2 * math.pi) - n * math.log(sigma) - float(np.square(x - mu).sum()) / (2 * sigma**2)
    if family == "log_normal":
        mu, sigma = params["mu_log"], params["sigma_log"]
        log_x = np.log(x)
        normal_part = -0.5 * n * math.log(2 * math.pi) - n * math.log(sigma) - float(np.square(log_x - mu).sum()) / (2 * sigma**2)
        return normal_part - float(log_x.sum())
    if family == "power_law":
        alpha, x_min = params["alpha"], params["x_min"]
        return n * math.log(alpha - 1) - n * math.log(x_min) - alpha * float(np.log(x / x_min).sum())
    raise ValueError(f"unknown family {family!r}")


def fit_mle(x: Sequence[float], family: str, x_min: Optional[float] = None) -> FittedDistribution:
    """Closed-form maximum-likelihood fit of one family to positive data.

    ``x_min`` applies to the power law only and defaults to min(x).
    Raises :class:`DegenerateSampleError` when the sample cannot identify
    the family's parameters (too small, nonpositive where positivity is
    required, or zero spread).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise DegenerateSampleError(f"need at least 2 observations, got {n}")
    if family in ("log_normal", "exponential", "power_law") and (x <= 0).any():
        raise DegenerateSampleError(f"{family} requires strictly positive data")

    if family == "exponential":
        lam = 1.0 / float(x.mean())
        params = {"lam": lam}
    elif family == "normal":
        mu = float(x.mean())
        sigma = float(x.std())  # population (1/n) std: the likelihood maximizer
        if sigma == 0:
            raise DegenerateSampleError("normal fit degenerate: zero variance")
        params = {"mu": mu, "sigma": sigma}
    elif family == "log_normal":
        log_x = np.log(x)
        mu = float(log_x.mean())
        sigma = float(log_x.std())
        if sigma == 0:
            raise DegenerateSampleError("log-normal fit degenerate: zero variance of ln x")
        params = {"mu_log": mu, "sigma_log": sigma}
    else:  # power_law
        if x_min is None:
            x_min = float(x.min())
        if x_min <= 0:
            raise DegenerateSampleError(f"power law needs x_min > 0, got {x_min}")
        if (x < x_min).any():
            raise DegenerateSampleError("power law requires all data >= x_min")
        log_ratio_sum = float(np.log(x / x_min).sum())
        if log_ratio_sum == 0:
            raise DegenerateSampleError("power-law fit degenerate: all values equal x_min")
        alpha = 1.0 + n / log_ratio_sum
        params = {"alpha": alpha, "x_min": float(x_min)}

    loglik = log_likelihood(family, x, params)
    bic = N_PARAMS[family] * math.log(n) - 2.0 * loglik
    return FittedDistribution(family=family, params=params, log_likelihood=loglik, bic=bic, n=n)


@dataclass(frozen=True)
class FitComparison:
    city_id: str
    fits: dict[str, FittedDistribution]
    failures: dict[str, str]
    best_by_bic: str
    best_by_loglik: str


def compare_fits(x: Sequence[float], city_id: str = "") -> FitComparison:
    """Fit all four families and pick the BIC and log-likelihood winners.

    Per-family failures are recorded, not raised; at least two families
    must succeed for a comparison to make sense.
    """
    fits: dict[str, FittedDistribution] = {}
    failures: dict[str, str] = {}
    for family in FAMILIES:
        try:
            fits[family] = fit_mle(x, family)
        except DegenerateSampleError as exc:
            failures[family] = str(exc)
    if len(fits) < 2:
        raise InsufficientFitsError(
            f"only {len(fits)} of {len(FAMILIES)} families fit successfully: {failures}"
        )
    best_by_bic = min(fits, key=lambda f: (fits[f].bic, FAMILIES.index(f)))
    best_by_loglik = max(fits, key=lambda f: (fits[f].log_likelihood, -FAMILIES.index(f)))
    return FitComparison(
        city_id=city_id,
        fits=fits,
        failures=failures,
        best_by_bic=best_by_bic,
        best_by_loglik=best_by_loglik,
    )


def concentration_summary(comparisons: Sequence[FitComparison]) -> dict[str, float]:
    """Percentage of cities each family wins by BIC; percentages sum to 100."""
    if not comparisons:
        raise ValueError("need at least one fit comparison")
    wins = {family: 0 for family in FAMILIES}
    for comp in comparisons:
        wins[comp.best_by_bic] += 1
    return {family: 100.0 * count / len(comparisons) for family, count in wins.items()}


def comparison_to_dict(comp: FitComparison) -> dict:
    """JSON-friendly view of one city's fits with winner flags."""
    return {
        "city_id": comp.city_id,
        "best_by_bic": comp.best_by_bic,
        "best_by_loglik": comp.best_by_loglik,
        "failures": dict(sorted(comp.failures.items())),
        "fits": {
            family: {
                "params": {k: fit.params[k] for k in sorted(fit.params)},
                "log_likelihood": fit.log_likelihood,
                "bic": fit.bic,
                "n": fit.n,
                "wins_bic": family == comp.best_by_bic,
                "wins_loglik": family == comp.best_by_loglik,
            }
            for family, fit in sorted(comp.fits.items())
        },
    }


def heatmap_export(
    grid: TileGrid,
    driving: TileCountVector,
    total: TileCountVector,
    path,
) -> None:
    """Write one CSV row per active tile: indices, center, driving and total counts."""
    tiles = tuple(grid.active_tiles())
    if driving.tiles != tiles or total.tiles != tiles:
        raise ShapeError("count vectors are not aligned with the grid's active tiles")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "center_lat", "center_lon", "driving_count", "total_count"])
        for i, tile in enumerate(tiles):
            center = grid.tile_center(tile)
            writer.writerow([
                tile.row,
                tile.col,
                repr(center.lat),
                repr(center.lon),
                int(driving.counts[i]),
                int(total.counts[i]),
            ])
