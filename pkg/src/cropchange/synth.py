"""Synthetic landscapes with a known truth, for checking the estimators.

A truth change map is tiled from square patches, then each pixel's mapped
class is drawn from the error-matrix row of its true class. Repeatedly
sampling the mapped strata and labeling samples with the truth gives a
Monte Carlo check of bias and CI coverage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crops import ChangeMap
from .estimate import Z95, stratified_proportions
from .grid import GridHeader
from .sampling import allocate, draw_indices, stratum_pixel_index

NCLASS = 4


def symmetric_confusion(error_rate, k=NCLASS):
    """Error matrix keeping ``1 - error_rate`` on the diagonal, rest spread evenly."""
    e = np.full((k, k), error_rate / (k - 1))
    np.fill_diagonal(e, 1.0 - error_rate)
    return e


@dataclass(frozen=True, eq=False)
class SynthSpec:
    nrows: int = 200
    ncols: int = 200
    proportions: tuple = (0.60, 0.25, 0.08, 0.07)
    error_matrix: np.ndarray = None
    seed: int = 0
    patch_size: int = 5
    pixel_ha: float = 0.01
    # ~10 m pixels near the equator
    cellsize: float = 10.0 / 111_194.93
    xll: float = 39.0
    yll: float = 13.0

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        if p.shape != (NCLASS,) or (p < 0).any() or not np.isclose(p.sum(), 1.0):
            raise ValueError("proportions must be 4 non-negative values summing to 1")
        e = np.eye(NCLASS) if self.error_matrix is None else np.asarray(self.error_matrix, dtype=float)
        if e.shape != (NCLASS, NCLASS) or (e < 0).any() or not np.allclose(e.sum(axis=1), 1.0):
            raise ValueError("error matrix must be 4x4 with rows summing to 1")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        object.__setattr__(self, "proportions", tuple(p))
        object.__setattr__(self, "error_matrix", e)

    @property
    def header(self):
        return GridHeader(self.ncols, self.nrows, self.xll, self.yll, self.cellsize, -9999)


def generate(spec):
    """Return ``(truth, mapped)`` change maps, deterministic in ``spec.seed``."""
    rng_truth = np.random.default_rng([spec.seed, 0])
    rng_map = np.random.default_rng([spec.seed, 1])
    ps = spec.patch_size
    pr, pc = -(-spec.nrows // ps), -(-spec.ncols // ps)
    patches = rng_truth.choice(NCLASS, size=(pr, pc), p=spec.proportions)
    truth = np.repeat(np.repeat(patches, ps, axis=0), ps, axis=1)[: spec.nrows, : spec.ncols]
    cum = np.cumsum(spec.error_matrix, axis=1)
    cum[:, -1] = 1.0
    u = rng_map.random(truth.shape)
    mapped = (u[..., None] >= cum[truth]).sum(axis=-1)
    h = spec.header
    return ChangeMap(h, truth), ChangeMap(h, mapped)


@dataclass
class CoverageResult:
    true_area: np.ndarray
    estimates: np.ndarray  # (reps, 4) area, NaN rows for infeasible reps
    ci95: np.ndarray  # (reps, 4)
    plan: dict

    @property
    def feasible(self):
        return ~np.isnan(self.estimates).any(axis=1)

    @property
    def n_feasible(self):
        return int(self.feasible.sum())

    @property
    def mean_estimate(self):
        return self.estimates[self.feasible].mean(axis=0)

    @property
    def bias(self):
        return self.mean_estimate - self.true_area

    @property
    def relative_bias(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.bias / self.true_area

    @property
    def mc_se(self):
        """Monte Carlo standard error of the mean estimate."""
        ok = self.estimates[self.feasible]
        return ok.std(axis=0, ddof=1) / np.sqrt(len(ok))

    @property
    def coverage(self):
        ok = self.feasible
        est, ci = self.estimates[ok], self.ci95[ok]
        hit = np.abs(est - self.true_area) <= ci
        return hit.mean(axis=0)


def coverage_trial(spec, n_samples=800, reps=500, prealloc=100, seed=None):
    """Repeat stratified sampling of the mapped landscape ``reps`` times.

    Strata are the mapped classes; reference labels are the truth. Rep ``r``
    draws with seed ``(seed, r)`` so reps are independent of execution order.
    """
    truth, mapped = generate(spec)
    seed = spec.seed if seed is None else seed
    counts = mapped.stratum_counts
    areas = {c: n * spec.pixel_ha for c, n in counts.items()}
    plan = allocate(n_samples, prealloc, areas)
    total = sum(areas.values())
    weights = np.array([areas[c] / total for c in range(NCLASS)])
    true_area = np.bincount(truth.cells.ravel(), minlength=NCLASS) * spec.pixel_ha
    pixels = stratum_pixel_index(mapped)
    flat_truth = truth.cells.ravel()

    est = np.full((reps, NCLASS), np.nan)
    ci = np.full((reps, NCLASS), np.nan)
    for r in range(reps):
        picks = draw_indices(pixels, plan.per_stratum_n, seed=_rep_seed(seed, r))
        cm = np.zeros((NCLASS, NCLASS), dtype=np.int64)
        for s, idx in picks.items():
            cm[s] = np.bincount(flat_truth[idx], minlength=NCLASS)
        n = cm.sum(axis=1)
        if ((weights > 0) & (n < 2)).any():
            continue
        p, se = stratified_proportions(cm, weights)
        est[r] = total * p
        ci[r] = Z95 * total * se
    return CoverageResult(true_area=true_area, estimates=est, ci95=ci, plan=plan.per_stratum_n)


def _rep_seed(seed, rep):
    # one integer per rep, stable across runs; draw_indices adds the stratum
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1)[0])
