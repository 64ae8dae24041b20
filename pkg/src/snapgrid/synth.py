"""Synthetic corpus generation with known planted ground truth.

Every quantity the analysis pipeline estimates is planted here explicitly:
per-tile intensity comes from a chosen distribution family, timestamps get
a configurable night uplift over fixed-offset timezones, frame scores are
Beta(8,2) for driving clips and Beta(2,8) otherwise (about a 2% per-frame
error at the 0.5 cutoff), and city-level demographics follow a linear
model with known coefficients. The generator is fully deterministic: city
``i`` draws from ``SeedSequence(seed, spawn_key=(i,))``, so adding or
reordering cities never perturbs the others.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from datetime import date, datetime, timedelta
from typing import Optional, Sequence

import numpy as np

from .geo import METERS_PER_DEG_LAT, GeoPoint, Region, TileGrid, build_grid
from .records import DRIVING, NON_DRIVING, SnapRecord, get_zone
from .regression import DESIGN_TERMS, CityStats
from .temporal import HOURS_PER_WEEK, NightWindow

# Coefficients planted for regression recovery, aligned with DESIGN_TERMS.
# The intercept sits high enough that ln(driving+1) stays positive across
# the whole covariate box.
PLANTED_COEFS = (-2.0, 0.05, 5.85, 1.92, 2.38, 0.19, -0.21, 1.21)

# Observed covariate ranges the synthetic cities are drawn from.
COVARIATE_RANGES = {
    "log_pop": (12.35, 17.19),
    "age_lt20_pct": (15.0, 46.7),
    "age_20_40_pct": (19.4, 58.3),
    "age_40_60_pct": (14.1, 60.5),
    "male_frac": (0.458, 0.756),
    "log_total_snaps": (5.412, 13.813),
}

# Site table for default synthetic cities: (lat, lon, fixed-offset zone).
# Etc/GMT zones invert the sign: Etc/GMT-3 is UTC+3.
_CITY_SITES = (
    (40.7, -74.0, "Etc/GMT+5"),
    (51.5, -0.1, "Etc/GMT"),
    (35.7, 139.7, "Etc/GMT-9"),
    (-23.5, -46.6, "Etc/GMT+3"),
    (19.4, -99.1, "Etc/GMT+6"),
    (55.8, 37.6, "Etc/GMT-3"),
    (28.6, 77.2, "Etc/GMT-5"),
    (-33.9, 151.2, "Etc/GMT-10"),
    (30.0, 31.2, "Etc/GMT-2"),
    (1.35, 103.8, "Etc/GMT-8"),
    (48.9, 2.35, "Etc/GMT-1"),
    (-34.6, -58.4, "Etc/GMT+3"),
)


@dataclass(frozen=True)
class CitySynthConfig:
    city_id: str
    tz_id: str
    origin_lat: float
    origin_lon: float
    n_rows: int = 10
    n_cols: int = 10
    n_records: int = 30_000
    family: str = "power_law"
    family_params: dict = field(default_factory=lambda: {"alpha": 2.5, "x_min": 1.0})
    driving_fraction: float = 0.2356
    night_uplift_factor: float = 1.75
    deleted_fraction: float = 0.0298


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    cities: tuple[CitySynthConfig, ...]
    start_date: str = "2025-03-03"  # a Monday, local in every city
    n_days: int = 28
    duration_range: tuple[float, float] = (3.0, 10.0)
    tile_size_m: float = 1000.0


def default_spec(seed: int, n_cities: int = 10, n_records: int = 30_000) -> SynthSpec:
    """A ready-made corpus: power-law tiles everywhere, alpha varying by city."""
    cities = []
    for i in range(n_cities):
        lat, lon, tz = _CITY_SITES[i % len(_CITY_SITES)]
        cities.append(
            CitySynthConfig(
                city_id=f"city{i:02d}",
                tz_id=tz,
                origin_lat=lat,
                origin_lon=lon,
                n_records=n_records,
                family_params={"alpha": 2.2 + 0.06 * i, "x_min": 1.0},
            )
        )
    return SynthSpec(seed=seed, cities=tuple(cities))


def city_region(cfg: CitySynthConfig, tile_size_m: float = 1000.0) -> Region:
    """Bounding box spanning exactly the configured tile layout."""
    origin = GeoPoint(cfg.origin_lat, cfg.origin_lon)
    north = origin.lat + cfg.n_rows * tile_size_m / METERS_PER_DEG_LAT
    meters_per_deg_lon = METERS_PER_DEG_LAT * math.cos(math.radians(origin.lat))
    east = origin.lon + cfg.n_cols * tile_size_m / meters_per_deg_lon
    return Region.from_bbox(origin.lat, origin.lon, north, east)


def city_rng(seed: int, city_index: int) -> np.random.Generator:
    """Independent per-city stream; stable under city addition or reordering."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(city_index,)))


def sample_family(family: str, params: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n values from one of the four fit families."""
    if family == "exponential":
        return rng.exponential(scale=1.0 / params["lam"], size=n)
    if family == "normal":
        return rng.normal(params["mu"], params["sigma"], size=n)
    if family == "log_normal":
        return rng.lognormal(params["mu_log"], params["sigma_log"], size=n)
    if family == "power_law":
        u = rng.random(n)
        return params["x_min"] * u ** (-1.0 / (params["alpha"] - 1.0))
    raise ValueError(f"unknown family {family!r}")


def _tile_weights(cfg: CitySynthConfig, n_tiles: int, rng: np.random.Generator) -> np.ndarray:
    w = sample_family(cfg.family, cfg.family_params, n_tiles, rng)
    w = np.clip(w, 0.0, None)
    if w.sum() == 0:
        w = np.ones(n_tiles)
    return w / w.sum()


def _largest_remainder(raw: np.ndarray, total: int) -> np.ndarray:
    """Round nonnegative quotas to integers that sum exactly to total."""
    base = np.floor(raw).astype(np.int64)
    order = np.argsort(-(raw - base))
    base[order[: total - base.sum()]] += 1
    return base


def _hour_weights(factor: float, window: NightWindow = NightWindow()) -> np.ndarray:
    w = np.array([factor if window.contains(h) else 1.0 for h in range(24)])
    return w / w.sum()


def gen_city(
    cfg: CitySynthConfig,
    city_index: int,
    spec: SynthSpec,
) -> tuple[list[SnapRecord], TileGrid]:
    """Generate one city's records against its grid, with planted labels."""
    rng = city_rng(spec.seed, city_index)
    region = city_region(cfg, spec.tile_size_m)
    grid = build_grid(region, spec.tile_size_m)
    origin = grid.origin

    n = cfg.n_records
    n_tiles = grid.n_rows * grid.n_cols
    probs = _tile_weights(cfg, n_tiles, rng)

    # Both label classes follow the planted tile intensity exactly (largest-
    # remainder quotas), so per-tile driving counts are a faithful sample of
    # the configured family rather than that family blurred by multinomial
    # noise. A final shuffle hides the tile-major construction order.
    n_driving = int(round(n * cfg.driving_fraction))
    per_tile_driving = _largest_remainder(probs * n_driving, n_driving)
    per_tile_other = _largest_remainder(probs * (n - n_driving), n - n_driving)
    tile_flat = np.repeat(np.arange(n_tiles), per_tile_driving + per_tile_other)
    driving = np.zeros(n, dtype=bool)
    pos = 0
    for t in range(n_tiles):
        driving[pos : pos + per_tile_driving[t]] = True
        pos += per_tile_driving[t] + per_tile_other[t]
    order = rng.permutation(n)
    tile_flat = tile_flat[order]
    driving = driving[order]

    frac_x = rng.random(n)
    frac_y = rng.random(n)
    days = rng.integers(0, spec.n_days, size=n)
    hours = rng.choice(24, size=n, p=_hour_weights(cfg.night_uplift_factor))
    minutes = rng.integers(0, 60, size=n)
    seconds = rng.integers(0, 60, size=n)
    lo, hi = spec.duration_range
    durations = rng.uniform(lo, hi, size=n)
    deleted = rng.random(n) < cfg.deleted_fraction

    zone = get_zone(cfg.tz_id)
    day0 = date.fromisoformat(spec.start_date)
    base = datetime(day0.year, day0.month, day0.day, tzinfo=zone)
    mdeg_lat = METERS_PER_DEG_LAT
    mdeg_lon = METERS_PER_DEG_LAT * math.cos(math.radians(origin.lat))

    records = []
    for i in range(n):
        row, col = divmod(int(tile_flat[i]), grid.n_cols)
        x = (col + frac_x[i]) * spec.tile_size_m
        y = (row + frac_y[i]) * spec.tile_size_m
        loc = GeoPoint(origin.lat + y / mdeg_lat, origin.lon + x / mdeg_lon)
        dt = base + timedelta(
            days=int(days[i]), hours=int(hours[i]), minutes=int(minutes[i]), seconds=int(seconds[i])
        )
        duration = float(durations[i])
        n_frames = max(1, int(duration))
        if driving[i]:
            scores = rng.beta(8.0, 2.0, size=n_frames)
        else:
            scores = rng.beta(2.0, 8.0, size=n_frames)
        records.append(
            SnapRecord(
                id=f"{cfg.city_id}-{i:06d}",
                ts_utc=int(dt.timestamp()),
                location=loc,
                city_id=cfg.city_id,
                duration_s=duration,
                frame_scores=tuple(float(s) for s in scores),
                label=DRIVING if driving[i] else NON_DRIVING,
                deleted=bool(deleted[i]),
            )
        )
    return records, grid


def gen_corpus(spec: SynthSpec) -> tuple[list[SnapRecord], dict[str, TileGrid]]:
    """All cities' records concatenated in city order, plus each city's grid."""
    all_records: list[SnapRecord] = []
    grids: dict[str, TileGrid] = {}
    for i, cfg in enumerate(spec.cities):
        records, grid = gen_city(cfg, i, spec)
        all_records.extend(records)
        grids[cfg.city_id] = grid
    return all_records, grids


def gen_annotations(
    records: Sequence[SnapRecord],
    flip_prob: float,
    seed: int,
    n_raters: int = 3,
) -> list[tuple[str, str, str]]:
    """Simulated rater judgments: each rater flips the true label with flip_prob.

    Returns long-format rows (item_id, rater_id, category).
    """
    if not 0.0 <= flip_prob < 0.5:
        raise ValueError(f"flip_prob {flip_prob} outside [0, 0.5)")
    rng = np.random.default_rng(seed)
    rows = []
    for rec in records:
        if rec.label is None:
            raise ValueError(f"record {rec.id} has no true label to annotate")
        for r in range(n_raters):
            flip = rng.random() < flip_prob
            if flip:
                category = NON_DRIVING if rec.label == DRIVING else DRIVING
            else:
                category = rec.label
            rows.append((rec.id, f"rater{r}", category))
    return rows


def gen_regression_cities(
    n_cities: int = 130,
    seed: int = 0,
    coefs: Sequence[float] = PLANTED_COEFS,
    noise_sigma: float = 0.0,
) -> list[CityStats]:
    """Cities whose ln(driving+1) follows the planted linear model exactly
    (plus optional gaussian noise), with covariates drawn uniformly from
    the observed ranges. Counts stay as floats so the zero-noise model is
    recoverable to machine precision.
    """
    if len(coefs) != len(DESIGN_TERMS):
        raise ValueError(f"need {len(DESIGN_TERMS)} coefficients, got {len(coefs)}")
    rng = np.random.default_rng(seed)
    r = COVARIATE_RANGES
    cities = []
    for i in range(n_cities):
        log_pop = rng.uniform(*r["log_pop"])
        male_frac = rng.uniform(*r["male_frac"])
        age_lt20 = rng.uniform(*r["age_lt20_pct"])
        age_20_40 = rng.uniform(*r["age_20_40_pct"])
        age_40_60 = rng.uniform(*r["age_40_60_pct"])
        log_ts = rng.uniform(*r["log_total_snaps"])
        developing = bool(rng.integers(0, 2))
        x = np.array(
            [
                1.0,
                male_frac * 100.0,
                age_lt20 / 100.0,
                age_20_40 / 100.0,
                age_40_60 / 100.0,
                1.0 if developing else 0.0,
                log_pop,
                log_ts,
            ]
        )
        y = float(x @ np.asarray(coefs, dtype=float))
        if noise_sigma > 0:
            y += rng.normal(0.0, noise_sigma)
        cities.append(
            CityStats(
                city_id=f"rc{i:03d}",
                total_snaps=math.exp(log_ts) - 1.0,
                driving_snaps=math.exp(y) - 1.0,
                population=math.exp(log_pop) - 1.0,
                male_pct=male_frac * 100.0,
                age_lt20_pct=age_lt20,
                age_20_40_pct=age_20_40,
                age_40_60_pct=age_40_60,
                developing=developing,
            )
        )
    return cities


def gen_planted_week_vectors(
    n_cities: int = 30,
    k: int = 3,
    seed: int = 0,
    noise: float = 0.15,
) -> tuple[np.ndarray, np.ndarray]:
    """Hour-of-week fraction vectors around k well-separated archetypes.

    Archetypes differ in daily shape (commute peaks, night life, flat) and
    weekend emphasis; rows are multiplicative-noised then renormalized.
    Returns (matrix, true_labels) with cities assigned round-robin.
    """
    hours = np.arange(24)

    def day_shape(kind: int) -> np.ndarray:
        if kind == 0:  # twin commute peaks
            return 1.0 + 2.5 * np.exp(-0.5 * ((hours - 8) / 1.5) ** 2) + 2.5 * np.exp(
                -0.5 * ((hours - 17) / 1.5) ** 2
            )
        if kind == 1:  # evening/night heavy
            return 1.0 + 3.5 * np.exp(-0.5 * ((hours - 22) / 2.0) ** 2) + 1.5 * np.exp(
                -0.5 * (hours / 2.0) ** 2
            )
        # daytime plateau
        return 1.0 + 2.0 * (np.abs(hours - 13) < 5)

    archetypes = []
    for kind in range(k):
        weekday = day_shape(kind % 3)
        weekend_boost = (1.0, 2.2, 0.6)[kind % 3]
        week = np.concatenate([weekday] * 5 + [weekday * weekend_boost] * 2)
        archetypes.append(week / week.sum())

    rng = np.random.default_rng(seed)
    labels = np.arange(n_cities) % k
    rows = []
    for lab in labels:
        noisy = archetypes[lab] * rng.lognormal(0.0, noise, size=HOURS_PER_WEEK)
        rows.append(noisy / noisy.sum())
    return np.vstack(rows), labels


def build_manifest(spec: SynthSpec, regression_seed: Optional[int] = None, regression_sigma: float = 0.1) -> dict:
    """Planted ground truth for a generated corpus, JSON-serializable."""
    return {
        "seed": spec.seed,
        "start_date": spec.start_date,
        "n_days": spec.n_days,
        "tile_size_m": spec.tile_size_m,
        "duration_range": list(spec.duration_range),
        "cities": {cfg.city_id: asdict(cfg) for cfg in spec.cities},
        "regression": {
            "coefs": dict(zip(DESIGN_TERMS, PLANTED_COEFS)),
            "seed": spec.seed if regression_seed is None else regression_seed,
            "noise_sigma": regression_sigma,
        },
    }


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
