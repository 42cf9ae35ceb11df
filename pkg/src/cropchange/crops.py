"""Change-map composition and the peak-NDVI false-positive filter."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .grid import ClassGrid, RealGrid, class_pixel_counts, read_grid


class ChangeClass(IntEnum):
    STABLE_NONCROP = 0
    STABLE_CROP = 1
    GAIN = 2
    LOSS = 3

    @property
    def label(self):
        return self.name.lower()

    @property
    def crop_2020(self):
        return self in (ChangeClass.STABLE_CROP, ChangeClass.LOSS)

    @property
    def crop_2021(self):
        return self in (ChangeClass.STABLE_CROP, ChangeClass.GAIN)


# indexed [crop_2020][crop_2021]
_TRANSITION = np.array([[ChangeClass.STABLE_NONCROP, ChangeClass.GAIN],
                        [ChangeClass.LOSS, ChangeClass.STABLE_CROP]], dtype=np.int32)


def change_code(crop_2020, crop_2021):
    return ChangeClass(int(_TRANSITION[int(bool(crop_2020)), int(bool(crop_2021))]))


class ChangeMap(ClassGrid):
    """Class grid restricted to the four change codes."""

    def __init__(self, header, cells):
        super().__init__(header, cells)
        codes = self.cells[self.valid]
        if codes.size and codes.max() > max(ChangeClass):
            raise ValueError("change map cells must be change class codes 0-3")

    @classmethod
    def from_grid(cls, grid):
        return cls(grid.header, grid.cells)

    @property
    def stratum_counts(self):
        counts = class_pixel_counts(self)
        return {int(c): counts.get(int(c), 0) for c in ChangeClass}

    def decompose(self):
        """The two binary annual maps this change map was composed from."""
        valid = self.valid
        nodata = self.header.nodata
        c20 = np.isin(self.cells, (ChangeClass.STABLE_CROP, ChangeClass.LOSS)).astype(np.int32)
        c21 = np.isin(self.cells, (ChangeClass.STABLE_CROP, ChangeClass.GAIN)).astype(np.int32)
        return (ClassGrid(self.header, np.where(valid, c20, nodata)),
                ClassGrid(self.header, np.where(valid, c21, nodata)))


def _check_binary(grid, name):
    vals = grid.cells[grid.valid]
    if vals.size and not np.isin(vals, (0, 1)).all():
        bad = sorted(set(np.unique(vals).tolist()) - {0, 1})
        raise ValueError(f"{name} must be binary (0/1), found codes {bad}")


def compose_change(map2020, map2021):
    """Combine two binary crop maps into a four-class change map.

    A cell that is nodata in either year is nodata in the result, written with
    the first map's sentinel.
    """
    if map2020.header.shape != map2021.header.shape or _georef(map2020.header) != _georef(map2021.header):
        raise ValueError(f"header mismatch: {map2020.header} vs {map2021.header}")
    _check_binary(map2020, "map2020")
    _check_binary(map2021, "map2021")
    valid = map2020.valid & map2021.valid
    a = np.where(valid, map2020.cells, 0)
    b = np.where(valid, map2021.cells, 0)
    cells = np.where(valid, _TRANSITION[a, b], map2020.header.nodata)
    return ChangeMap(map2020.header, cells)


def _georef(h):
    return (h.ncols, h.nrows, h.xll, h.yll, h.cellsize)


# --- NDVI ---------------------------------------------------------------------


@dataclass(frozen=True)
class NdviStack:
    """Twelve monthly NDVI grids sharing one georeference, February first."""

    months: tuple

    def __post_init__(self):
        months = tuple(self.months)
        if len(months) != 12:
            raise ValueError(f"NDVI stack needs 12 monthly grids, got {len(months)}")
        ref = _georef(months[0].header)
        for i, m in enumerate(months):
            if _georef(m.header) != ref:
                raise ValueError(f"month {i} header differs from month 0")
        object.__setattr__(self, "months", months)

    @property
    def header(self):
        return self.months[0].header


def load_stack_manifest(path):
    """Load an :class:`NdviStack` from a JSON manifest of 12 grid paths.

    The manifest is either a list of paths or ``{"months": [...]}``; relative
    paths resolve against the manifest's directory.
    """
    path = Path(path)
    doc = json.loads(path.read_text())
    paths = doc["months"] if isinstance(doc, dict) else doc
    return NdviStack(tuple(read_grid(path.parent / p, kind="real") for p in paths))


@dataclass(frozen=True)
class FilterConfig:
    n_sigma: float = 3.5

    def __post_init__(self):
        if not (math.isfinite(self.n_sigma) and self.n_sigma >= 0):
            raise ValueError(f"n_sigma must be finite and >= 0, got {self.n_sigma}")


@dataclass(frozen=True)
class PeakStats:
    mu: float
    sigma: float
    count: int


class EmptyStatisticsError(ValueError):
    pass


def peak_ndvi(stack):
    """Per-pixel maximum over the valid months; all-nodata pixels stay nodata."""
    header = stack.header
    values = np.stack([m.cells for m in stack.months])
    valid = np.stack([m.valid for m in stack.months])
    peak = np.where(valid, values, -np.inf).max(axis=0)
    return RealGrid(header, np.where(valid.any(axis=0), peak, header.nodata))


def _crop_peaks(crop_map, peaks):
    if _georef(crop_map.header) != _georef(peaks.header):
        raise ValueError("crop map and peak grid headers differ")
    _check_binary(crop_map, "crop map")
    return (crop_map.cells == 1) & crop_map.valid & peaks.valid


def peak_stats(crop_map, peaks):
    """Mean and population standard deviation of peak NDVI over crop pixels."""
    sel = _crop_peaks(crop_map, peaks)
    values = peaks.cells[sel]
    if values.size == 0:
        raise EmptyStatisticsError("no crop pixels with a valid peak NDVI")
    mu = float(values.mean())
    sigma = float(np.sqrt(np.mean((values - mu) ** 2)))
    return PeakStats(mu=mu, sigma=sigma, count=int(values.size))


def _anomalous(crop_map, peaks, stats, n_sigma):
    sel = _crop_peaks(crop_map, peaks)
    return sel & (peaks.cells < stats.mu - n_sigma * stats.sigma)


def apply_ndvi_filter(crop_map, peaks, cfg=FilterConfig()):
    """Flip crop pixels whose peak NDVI is strictly below mu - n*sigma.

    Statistics come from the input map once. Crop pixels without a valid peak
    are left as crop. Returns ``(filtered_map, reclassified_count)``.
    """
    stats = peak_stats(crop_map, peaks)
    flip = _anomalous(crop_map, peaks, stats, cfg.n_sigma)
    return crop_map.with_cells(np.where(flip, 0, crop_map.cells)), int(flip.sum())


@dataclass(frozen=True)
class SweepPoint:
    n_sigma: float
    tpr: float
    fpr: float
    tp: int
    fp: int
    fn: int
    tn: int
    reclassified: int


PUBLISHED_THRESHOLDS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)


def _rate(num, den):
    return num / den if den else float("nan")


def threshold_sweep(crop_map, peaks, labels, thresholds=PUBLISHED_THRESHOLDS):
    """TPR/FPR of the filtered map at labeled points, one row per threshold.

    ``labels`` is an iterable of ``(lon, lat, is_crop)``.
    """
    header = crop_map.header
    rows, cols, truth = [], [], []
    for lon, lat, is_crop in labels:
        idx = header.index_of(lon, lat)
        if idx is None:
            raise ValueError(f"label point ({lon}, {lat}) is off the grid")
        if not crop_map.valid[idx]:
            raise ValueError(f"label point ({lon}, {lat}) falls on a nodata pixel")
        rows.append(idx[0])
        cols.append(idx[1])
        truth.append(bool(is_crop))
    rows, cols, truth = np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(truth, dtype=bool)
    stats = peak_stats(crop_map, peaks)
    out = []
    for n in thresholds:
        flip = _anomalous(crop_map, peaks, stats, float(n))
        pred = (crop_map.cells == 1) & ~flip
        p = pred[rows, cols]
        tp = int((p & truth).sum())
        fp = int((p & ~truth).sum())
        fn = int((~p & truth).sum())
        tn = int((~p & ~truth).sum())
        out.append(SweepPoint(float(n), _rate(tp, tp + fn), _rate(fp, fp + tn), tp, fp, fn, tn, int(flip.sum())))
    return out
