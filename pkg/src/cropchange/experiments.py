"""Zone, buffer, subsample and map-comparison experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .crops import ChangeClass
from .estimate import (
    EstimationInfeasible,
    accuracy_report,
    binary_accuracy,
    build_confusion,
    estimate_annual,
    estimate_area,
    estimate_change,
)
from .geo import BufferSet, Intersection, RegionMinusBuffer, WholeMap
from .grid import stratum_areas

CHANGE_CODES = tuple(int(c) for c in ChangeClass)

PUBLISHED_SEEDS = (1, 10, 100, 1000, 10000, 100000, 2, 20, 200, 2000)


@dataclass(frozen=True)
class RegionSpec:
    name: str
    membership: object = field(default_factory=WholeMap)


def _change_areas(change_map, pixel_area, mask):
    areas = stratum_areas(change_map, pixel_area, mask)
    return {c: areas.get(c, 0.0) for c in CHANGE_CODES}


def _in_region(samples, region):
    if not samples:
        return []
    keep = region.contains(np.array([s.lon for s in samples]), np.array([s.lat for s in samples]))
    return [s for s, k in zip(samples, keep) if k]


@dataclass
class RegionResult:
    name: str
    stratum_areas: dict
    n_samples: int
    change: object = None
    annual: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def total_area(self):
        return sum(self.stratum_areas.values())


def estimate_region(change_map, samples, region, pixel_area, name=""):
    """Change and annual estimates inside one region.

    Each estimate fails independently; failures land in ``errors`` keyed by
    "change", 2020 or 2021.
    """
    areas = _change_areas(change_map, pixel_area, None if isinstance(region, WholeMap) else region)
    inside = _in_region(list(samples), region)
    res = RegionResult(name=name, stratum_areas=areas, n_samples=len(inside))
    try:
        res.change = estimate_change(inside, areas)
    except EstimationInfeasible as exc:
        res.errors["change"] = str(exc)
    for year in (2020, 2021):
        try:
            res.annual[year] = estimate_annual(inside, year, areas)
        except EstimationInfeasible as exc:
            res.errors[year] = str(exc)
    return res


def regional_estimates(change_map, samples, regions, pixel_area):
    """One :class:`RegionResult` per :class:`RegionSpec`, in input order."""
    samples = list(samples)
    return [estimate_region(change_map, samples, r.membership, pixel_area, name=r.name) for r in regions]


# --- buffer comparison ---------------------------------------------------------


def percent_interval(area, ci95, side_area):
    """Whole-percent interval of ``area +- ci95`` relative to ``side_area``.

    The lower end is floored at zero; both ends round half up.
    """
    if side_area <= 0:
        return (float("nan"), float("nan"))
    lo = max(0.0, (area - ci95) / side_area * 100.0)
    hi = max(0.0, (area + ci95) / side_area * 100.0)
    return (math.floor(lo + 0.5), math.floor(hi + 0.5))


@dataclass
class BufferSide:
    name: str
    result: RegionResult
    percent: dict = field(default_factory=dict)  # class -> (lo %, hi %)

    @property
    def feasible(self):
        return self.result.change is not None


@dataclass
class BufferComparison:
    radius_m: float
    inside: BufferSide
    outside: BufferSide


def _side(change_map, samples, region, pixel_area, name):
    res = estimate_region(change_map, samples, region, pixel_area, name=name)
    side = BufferSide(name, res)
    if res.change is not None:
        for c, a, ci in zip(res.change.classes, res.change.area_ha, res.change.ci95_ha):
            side.percent[c] = percent_interval(a, ci, res.total_area)
    return side


def buffer_regions(events, radius_m, region):
    """(inside, outside) membership predicates for an event buffer."""
    buf = BufferSet(tuple(getattr(e, "location", e) for e in events), radius_m)
    return Intersection((region, buf)), RegionMinusBuffer(region, buf)


def buffer_comparison(change_map, samples, events, radius_m, region, pixel_area):
    """Change estimates inside the dissolved event buffer and in the rest of
    ``region``.

    The inside side is clipped to ``region`` as well so the two sides
    partition it. An infeasible side keeps its error instead of raising.
    """
    inside, outside = buffer_regions(events, radius_m, region)
    samples = list(samples)
    return BufferComparison(
        radius_m=float(radius_m),
        inside=_side(change_map, samples, inside, pixel_area, "inside"),
        outside=_side(change_map, samples, outside, pixel_area, "outside"),
    )


# --- subsample experiment -----------------------------------------------------


@dataclass(frozen=True)
class SeedRow:
    seed: int
    n: int
    loss_area_ha: float = float("nan")
    loss_ci95_ha: float = float("nan")
    oa: float = float("nan")
    oa_ci95: float = float("nan")
    ua: float = float("nan")
    ua_ci95: float = float("nan")
    pa: float = float("nan")
    pa_ci95: float = float("nan")
    error: str = ""


@dataclass
class SubsampleResult:
    rows: list
    median_area_ha: float
    median_ci95_ha: float
    mean_area_ha: float
    mean_ci95_ha: float

    @property
    def feasible_rows(self):
        return [r for r in self.rows if not r.error]


def _seed_row(seed, subset, areas, target):
    try:
        cm = build_confusion(subset, "change", areas)
        est = estimate_area(cm)
        acc = accuracy_report(cm)
    except EstimationInfeasible as exc:
        return SeedRow(seed=seed, n=len(subset), error=str(exc))
    j = est.classes.index(target)
    ca = acc.cls(target)
    return SeedRow(
        seed=seed,
        n=len(subset),
        loss_area_ha=float(est.area_ha[j]),
        loss_ci95_ha=float(est.ci95_ha[j]),
        oa=acc.overall_accuracy,
        oa_ci95=acc.overall_accuracy_ci95,
        ua=ca.users_accuracy,
        ua_ci95=ca.users_accuracy_ci95,
        pa=ca.producers_accuracy,
        pa_ci95=ca.producers_accuracy_ci95,
    )


def subsample_experiment(samples_outside, n_sub, seeds, stratum_areas, target=ChangeClass.LOSS):
    """Re-estimate one class from uniform subsamples of a pooled sample.

    Each seed draws ``n_sub`` records without replacement from the records
    that have a resolved change label, ignoring strata; records keep their
    stratum for weighting. Seeds whose subsample leaves a stratum with fewer
    than two samples are reported with an error and left out of the
    aggregates.
    """
    pool = [s for s in samples_outside if s.reference("change") is not None]
    if n_sub > len(pool):
        raise ValueError(f"n_sub={n_sub} exceeds the {len(pool)} labeled samples available")
    if n_sub < 1:
        raise ValueError("n_sub must be positive")
    rows = []
    for seed in seeds:
        pick = np.sort(np.random.default_rng(int(seed)).choice(len(pool), size=n_sub, replace=False))
        rows.append(_seed_row(int(seed), [pool[i] for i in pick], stratum_areas, int(target)))
    ok = [r for r in rows if not r.error]
    area = np.array([r.loss_area_ha for r in ok])
    ci = np.array([r.loss_ci95_ha for r in ok])
    nan = float("nan")
    return SubsampleResult(
        rows=rows,
        median_area_ha=float(np.median(area)) if ok else nan,
        median_ci95_ha=float(np.median(ci)) if ok else nan,
        # fsum is exactly rounded, so the mean does not depend on seed order
        mean_area_ha=math.fsum(area) / len(ok) if ok else nan,
        mean_ci95_ha=math.fsum(ci) / len(ok) if ok else nan,
    )


# --- external map comparison ---------------------------------------------------


@dataclass(frozen=True)
class CandidateMap:
    """A land-cover map plus the mapping of its native codes to crop (True)
    or non-crop (False). ``default`` applies to codes absent from
    ``code_map``; with ``default=None`` such codes are an error."""

    name: str
    grid: object
    code_map: dict
    default: bool | None = None

    def is_crop(self, code):
        code = int(code)
        if code in self.code_map:
            return bool(self.code_map[code])
        if self.default is None:
            raise ValueError(f"{self.name}: class code {code} has no crop/non-crop mapping")
        return self.default


def compare_maps(candidates, test_points, n_boot=1000, seed=0):
    """Binary accuracy of each candidate at the test points, best F1 first.

    ``test_points`` holds ``(lon, lat, is_crop)``. Returns ``(name, report,
    (tn, fp, fn, tp))`` tuples; ties keep input order.
    """
    results = []
    for cand in candidates:
        h = cand.grid.header
        tn = fp = fn = tp = 0
        for lon, lat, truth in test_points:
            idx = h.index_of(lon, lat)
            if idx is None or not cand.grid.valid[idx]:
                raise ValueError(f"{cand.name}: test point ({lon}, {lat}) is off-grid or nodata")
            pred = cand.is_crop(cand.grid.cells[idx])
            if pred and truth:
                tp += 1
            elif pred:
                fp += 1
            elif truth:
                fn += 1
            else:
                tn += 1
        report = binary_accuracy(tn, fp, fn, tp, n_boot=n_boot, seed=seed)
        results.append((cand.name, report, (tn, fp, fn, tp)))
    return sorted(results, key=lambda r: -r[1].cls(1).f1)
