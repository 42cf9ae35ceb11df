"""Stratified estimators of class area and map accuracy.

Rows are map strata, columns are reference classes. With stratum weights
``W_i = A_i / A`` and sample counts ``n_ij``, the area-proportion matrix is
``p_ij = W_i n_ij / n_i.``; class proportions are its column sums and their
variance is ``sum_i W_i^2 (n_ij/n_i.)(1 - n_ij/n_i.) / (n_i. - 1)``. Strata
with zero weight are ignored everywhere; a stratum with positive weight and
fewer than two samples makes the design infeasible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crops import ChangeClass

Z95 = 1.96
ANNUAL_LABELS = {0: "noncrop", 1: "crop"}
CHANGE_LABELS = {int(c): c.label for c in ChangeClass}


class EstimationInfeasible(ValueError):
    """A positively weighted stratum has fewer than two usable samples."""

    def __init__(self, message, stratum=None):
        super().__init__(message)
        self.stratum = stratum


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    strata: tuple
    ref_classes: tuple
    counts: np.ndarray
    weights: np.ndarray
    total_area: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if counts.shape != (len(self.strata), len(self.ref_classes)):
            raise ValueError(f"counts shape {counts.shape} does not match {len(self.strata)}x{len(self.ref_classes)}")
        if weights.shape != (len(self.strata),):
            raise ValueError("one weight per stratum required")
        if (counts < 0).any() or (weights < 0).any():
            raise ValueError("counts and weights must be non-negative")
        if not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-9):
            raise ValueError(f"stratum weights sum to {weights.sum()}, not 1")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "weights", weights)
        short = (weights > 0) & (counts.sum(axis=1) < 2)
        if short.any():
            i = int(np.flatnonzero(short)[0])
            raise EstimationInfeasible(
                f"stratum {self.strata[i]} has weight {weights[i]:.6g} but only "
                f"{int(counts[i].sum())} sample(s); at least 2 are needed",
                stratum=self.strata[i],
            )

    @classmethod
    def from_areas(cls, strata, ref_classes, counts, areas):
        areas = np.asarray(areas, dtype=np.float64)
        total = float(areas.sum())
        if total <= 0:
            raise EstimationInfeasible("total mapped area is zero")
        return cls(tuple(strata), tuple(ref_classes), counts, areas / total, total)

    @property
    def row_totals(self):
        return self.counts.sum(axis=1)

    @property
    def live(self):
        return self.weights > 0


def _row_fractions(cm):
    n = cm.row_totals.astype(np.float64)
    frac = np.zeros(cm.counts.shape)
    live = cm.live
    frac[live] = cm.counts[live] / n[live, None]
    return frac


def proportion_matrix(cm):
    """Area proportions ``W_i n_ij / n_i.``; rows sum to ``W_i``."""
    return cm.weights[:, None] * _row_fractions(cm)


@dataclass(frozen=True, eq=False)
class AreaEstimate:
    classes: tuple
    labels: tuple
    proportion: np.ndarray
    se_proportion: np.ndarray
    total_area: float

    @property
    def area_ha(self):
        return self.total_area * self.proportion

    @property
    def se_area_ha(self):
        return self.total_area * self.se_proportion

    @property
    def ci95_ha(self):
        return Z95 * self.total_area * self.se_proportion

    def __getitem__(self, cls):
        j = self.classes.index(cls)
        return self.area_ha[j], self.ci95_ha[j]

    def rows(self):
        """(class, label, proportion, se, area_ha, ci95_ha) per reference class."""
        return [
            (c, lab, float(p), float(s), float(a), float(ci))
            for c, lab, p, s, a, ci in zip(
                self.classes, self.labels, self.proportion, self.se_proportion, self.area_ha, self.ci95_ha
            )
        ]


def stratified_proportions(counts, weights):
    """Class proportions and their standard errors from raw arrays.

    Array-level core shared by :func:`estimate_area` and the Monte Carlo
    driver; assumes feasibility was checked.
    """
    counts = np.asarray(counts, dtype=np.float64)
    live = weights > 0
    n = counts[live].sum(axis=1)
    frac = counts[live] / n[:, None]
    w = weights[live]
    p = (w[:, None] * frac).sum(axis=0)
    var = ((w ** 2)[:, None] * frac * (1.0 - frac) / (n - 1.0)[:, None]).sum(axis=0)
    return p, np.sqrt(var)


def estimate_area(cm, labels=None):
    p, se = stratified_proportions(cm.counts, cm.weights)
    if labels is None:
        labels = tuple(str(c) for c in cm.ref_classes)
    return AreaEstimate(tuple(cm.ref_classes), tuple(labels), p, se, cm.total_area)


def _default_refs(labeling):
    if labeling == "change":
        return tuple(int(c) for c in ChangeClass), tuple(CHANGE_LABELS.values())
    return (0, 1), (ANNUAL_LABELS[0], ANNUAL_LABELS[1])


def build_confusion(samples, labeling, stratum_areas, restrict=None, ref_classes=None):
    """Count samples by (map stratum, reference class).

    ``labeling`` is "change", 2020 or 2021. Samples without a resolved label
    for that labeling are skipped, as are samples outside ``restrict`` (any
    object with ``contains(lon, lat)``) and samples in zero-area strata.
    ``stratum_areas`` must already be clipped to the same region.
    """
    if ref_classes is None:
        ref_classes, _ = _default_refs(labeling)
    strata = tuple(sorted(int(s) for s in stratum_areas))
    areas = [float(stratum_areas[s]) for s in strata]
    row = {s: i for i, s in enumerate(strata)}
    col = {c: j for j, c in enumerate(ref_classes)}
    samples = list(samples)
    if restrict is not None and samples:
        keep = restrict.contains(np.array([s.lon for s in samples]), np.array([s.lat for s in samples]))
        samples = [s for s, k in zip(samples, keep) if k]
    counts = np.zeros((len(strata), len(ref_classes)), dtype=np.int64)
    for s in samples:
        ref = s.reference(labeling)
        if ref is None or s.stratum not in row:
            continue
        if ref not in col:
            raise ValueError(f"sample {s.id}: reference class {ref} not in {ref_classes}")
        counts[row[s.stratum], col[ref]] += 1
    return ConfusionMatrix.from_areas(strata, ref_classes, counts, areas)


def estimate_change(samples, stratum_areas, restrict=None):
    cm = build_confusion(samples, "change", stratum_areas, restrict)
    return estimate_area(cm, labels=_default_refs("change")[1])


def estimate_annual(samples, year, stratum_areas, restrict=None):
    """Crop / non-crop area for one year, still stratified by change class."""
    if int(year) not in (2020, 2021):
        raise ValueError(f"year must be 2020 or 2021, got {year}")
    cm = build_confusion(samples, int(year), stratum_areas, restrict)
    return estimate_area(cm, labels=_default_refs(int(year))[1])


# --- accuracy -------------------------------------------------------------------


@dataclass(frozen=True)
class ClassAccuracy:
    code: int
    users_accuracy: float
    users_accuracy_se: float
    producers_accuracy: float
    producers_accuracy_se: float
    f1: float
    f1_se: float
    tpr: float
    fpr: float

    @property
    def users_accuracy_ci95(self):
        return Z95 * self.users_accuracy_se

    @property
    def producers_accuracy_ci95(self):
        return Z95 * self.producers_accuracy_se


@dataclass(frozen=True)
class AccuracyReport:
    """Overall and per-class accuracy.

    ``method`` is "stratified" (analytic standard errors, 95% half-widths are
    1.96 SE) or "bootstrap" (``*_ci95`` fields hold percentile half-widths).
    """

    method: str
    overall_accuracy: float
    overall_accuracy_se: float
    classes: tuple
    ci95: dict = None

    def cls(self, code):
        return next(c for c in self.classes if c.code == code)

    @property
    def overall_accuracy_ci95(self):
        if self.ci95 is not None:
            return self.ci95["overall_accuracy"]
        return Z95 * self.overall_accuracy_se

    def half_width(self, metric, code=None):
        """95% half-width for ``metric`` of class ``code`` (or overall)."""
        if metric == "overall_accuracy":
            return self.overall_accuracy_ci95
        if self.ci95 is not None:
            return self.ci95[metric]
        return Z95 * getattr(self.cls(code), metric + "_se")


def _f1(p, r):
    if np.isnan(p) or np.isnan(r):
        return float("nan")
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _stratified_accuracy(cm):
    if tuple(cm.strata) != tuple(cm.ref_classes):
        raise ValueError("stratified accuracy needs identical map and reference classes")
    live = cm.live
    n = cm.row_totals.astype(np.float64)
    diag = np.diag(cm.counts).astype(np.float64)
    p = proportion_matrix(cm)
    col = p.sum(axis=0)
    oa = float(np.trace(p))
    ua = np.full(len(cm.strata), np.nan)
    ua[live] = diag[live] / n[live]
    var_ua = np.full(len(cm.strata), np.nan)
    var_ua[live] = ua[live] * (1 - ua[live]) / (n[live] - 1)
    var_oa = float(np.nansum(cm.weights[live] ** 2 * var_ua[live]))

    frac = _row_fractions(cm)
    w = cm.weights
    k = len(cm.strata)
    pa = np.full(k, np.nan)
    var_pa = np.full(k, np.nan)
    for j in range(k):
        if col[j] <= 0:
            continue
        pa[j] = p[j, j] / col[j]
        own = 0.0
        if live[j]:
            own = w[j] ** 2 * (1 - pa[j]) ** 2 * ua[j] * (1 - ua[j]) / (n[j] - 1)
        others = 0.0
        for i in range(k):
            if i == j or not live[i]:
                continue
            others += w[i] ** 2 * frac[i, j] * (1 - frac[i, j]) / (n[i] - 1)
        var_pa[j] = (own + pa[j] ** 2 * others) / col[j] ** 2

    raw_col = cm.counts.sum(axis=0).astype(np.float64)
    total = cm.counts.sum()
    classes = []
    for j, code in enumerate(cm.strata):
        tpr = diag[j] / raw_col[j] if raw_col[j] else float("nan")
        neg = total - raw_col[j]
        fpr = (n[j] - diag[j]) / neg if neg else float("nan")
        f1 = _f1(ua[j], pa[j])
        classes.append(ClassAccuracy(
            code=int(code),
            users_accuracy=float(ua[j]),
            users_accuracy_se=float(np.sqrt(var_ua[j])),
            producers_accuracy=float(pa[j]),
            producers_accuracy_se=float(np.sqrt(var_pa[j])),
            f1=float(f1),
            f1_se=float("nan"),
            tpr=float(tpr),
            fpr=float(fpr),
        ))
    return AccuracyReport("stratified", oa, float(np.sqrt(var_oa)), tuple(classes))


def _binary_metrics(tn, fp, fn, tp):
    tn, fp, fn, tp = (np.asarray(v, dtype=np.float64) for v in (tn, fp, fn, tp))
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        fpr = fp / (fp + tn)
        oa = (tp + tn) / (tn + fp + fn + tp)
        f1 = 2 * tp / (2 * tp + fp + fn)
    return {"precision": precision, "recall": recall, "f1": f1, "overall_accuracy": oa, "fpr": fpr}


def binary_accuracy(tn, fp, fn, tp, n_boot=1000, seed=0):
    """Crop-class metrics for an unweighted binary test set.

    Uncertainties come from a percentile bootstrap over test points: the
    four cell counts are redrawn ``n_boot`` times from a multinomial with the
    observed frequencies. ``ci95`` holds half the 2.5-97.5 percentile span.
    """
    counts = np.array([tn, fp, fn, tp], dtype=np.int64)
    if (counts < 0).any() or counts.sum() == 0:
        raise ValueError("binary counts must be non-negative with a positive total")
    if tp + fn == 0:
        raise ValueError("no reference crop points; recall is undefined")
    point = _binary_metrics(*counts)
    rng = np.random.default_rng([int(seed), 0xB007])
    draws = rng.multinomial(int(counts.sum()), counts / counts.sum(), size=int(n_boot))
    boot = _binary_metrics(draws[:, 0], draws[:, 1], draws[:, 2], draws[:, 3])
    half, se = {}, {}
    for key, vals in boot.items():
        vals = vals[np.isfinite(vals)]
        if vals.size < 2:
            half[key] = se[key] = float("nan")
            continue
        lo, hi = np.percentile(vals, [2.5, 97.5])
        half[key] = float((hi - lo) / 2)
        se[key] = float(np.std(vals, ddof=1))
    crop = ClassAccuracy(
        code=1,
        users_accuracy=float(point["precision"]),
        users_accuracy_se=se["precision"],
        producers_accuracy=float(point["recall"]),
        producers_accuracy_se=se["recall"],
        f1=float(point["f1"]),
        f1_se=se["f1"],
        tpr=float(point["recall"]),
        fpr=float(point["fpr"]),
    )
    ci95 = {
        "overall_accuracy": half["overall_accuracy"],
        "users_accuracy": half["precision"],
        "producers_accuracy": half["recall"],
        "f1": half["f1"],
    }
    return AccuracyReport("bootstrap", float(point["overall_accuracy"]), se["overall_accuracy"], (crop,), ci95)


def accuracy_report(cm, square=True, n_boot=1000, seed=0):
    """Accuracy of a confusion matrix.

    ``square=True``: stratified estimators over a matrix whose strata are the
    reference classes. ``square=False``: ``cm.counts`` is a raw 2x2 binary
    table (rows map 0/1, columns reference 0/1) scored without weights.
    """
    if square:
        return _stratified_accuracy(cm)
    c = np.asarray(cm.counts)
    if c.shape != (2, 2):
        raise ValueError("binary accuracy needs a 2x2 count table")
    return binary_accuracy(tn=c[0, 0], fp=c[1, 0], fn=c[0, 1], tp=c[1, 1], n_boot=n_boot, seed=seed)
