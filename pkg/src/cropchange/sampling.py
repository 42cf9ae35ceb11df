"""Stratified sample design and multi-annotator label consensus."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .crops import ChangeClass, change_code
from .geo import GeoPoint

CHANGE_STRATA = (ChangeClass.GAIN, ChangeClass.LOSS)
MIN_PER_STRATUM = 2

# resolution rank, worst last; a record takes the worst status over its years
STATUSES = ("unanimous", "majority", "adjudicated", "unresolved")


@dataclass(frozen=True)
class AllocationPlan:
    total_n: int
    prealloc: dict
    per_stratum_n: dict


def allocate(total_n, prealloc_per_change, stratum_areas, change_strata=CHANGE_STRATA):
    """Pre-allocate change strata, then split the rest proportionally to area.

    The remainder ``total_n - sum(prealloc)`` is shared over all strata with
    nonzero area by largest remainder (exact rational quotas, ties to the
    lower stratum code). A stratum that ends below two samples is topped up
    from the stratum holding the most samples above its own floor.
    """
    areas = {int(s): float(a) for s, a in stratum_areas.items()}
    if any(a < 0 for a in areas.values()):
        raise ValueError("stratum areas must be non-negative")
    strata = sorted(areas)
    live = [s for s in strata if areas[s] > 0]
    if not live:
        raise ValueError("all stratum areas are zero")
    change = {int(s) for s in change_strata}
    prealloc = {s: (int(prealloc_per_change) if s in change and areas[s] > 0 else 0) for s in strata}
    floor_total = sum(max(prealloc[s], MIN_PER_STRATUM) for s in live)
    needed = sum(prealloc.values()) + MIN_PER_STRATUM * len(live)
    if total_n < max(needed, floor_total):
        raise ValueError(
            f"total_n={total_n} too small: need at least {max(needed, floor_total)} "
            f"for preallocation and {MIN_PER_STRATUM} per stratum"
        )
    remainder = total_n - sum(prealloc.values())
    shares = _largest_remainder(remainder, {s: areas[s] for s in live})
    n = {s: prealloc[s] + shares.get(s, 0) for s in strata}

    floors = {s: max(prealloc[s], MIN_PER_STRATUM) for s in live}
    for s in live:
        while n[s] < MIN_PER_STRATUM:
            donor = max(live, key=lambda d: (n[d] - floors[d], -d))
            if n[donor] - floors[donor] <= 0:
                raise ValueError("cannot satisfy the two-per-stratum minimum")
            n[donor] -= 1
            n[s] += 1
    return AllocationPlan(total_n=int(total_n), prealloc=prealloc, per_stratum_n=n)


def _largest_remainder(seats, weights):
    total = sum(Fraction(w) for w in weights.values())
    quotas = {s: Fraction(seats) * Fraction(w) / total for s, w in weights.items()}
    alloc = {s: int(q) for s, q in quotas.items()}
    left = seats - sum(alloc.values())
    order = sorted(quotas, key=lambda s: (-(quotas[s] - alloc[s]), s))
    for s in order[:left]:
        alloc[s] += 1
    return alloc


@dataclass(frozen=True)
class SampleRecord:
    id: int
    location: GeoPoint
    stratum: int
    ref_2020: bool | None = None
    ref_2021: bool | None = None
    annotator_labels: tuple = ()
    consensus_status: str = "unresolved"

    @property
    def lon(self):
        return self.location.lon

    @property
    def lat(self):
        return self.location.lat

    def reference(self, labeling):
        """Reference class under ``labeling`` ("change", 2020, 2021) or None."""
        if labeling in (2020, "2020"):
            return None if self.ref_2020 is None else int(self.ref_2020)
        if labeling in (2021, "2021"):
            return None if self.ref_2021 is None else int(self.ref_2021)
        if labeling == "change":
            if self.ref_2020 is None or self.ref_2021 is None:
                return None
            return int(change_code(self.ref_2020, self.ref_2021))
        raise ValueError(f"unknown labeling {labeling!r}")


def stratum_substream(seed, stratum):
    return np.random.default_rng([int(seed), int(stratum)])


def draw_indices(stratum_pixels, per_stratum_n, seed):
    """Uniform draws without replacement per stratum.

    ``stratum_pixels`` maps stratum to an ascending array of flat pixel
    indices. Each stratum uses its own substream derived from
    ``(seed, stratum)``, so the draw for one stratum does not depend on the
    others. Returns ``{stratum: sorted flat indices}``.
    """
    out = {}
    for s, n in per_stratum_n.items():
        if n == 0:
            out[s] = np.empty(0, dtype=np.int64)
            continue
        pool = stratum_pixels.get(s, np.empty(0, dtype=np.int64))
        if len(pool) < n:
            raise ValueError(f"stratum {s} has {len(pool)} pixels but {n} samples were planned")
        pick = stratum_substream(seed, s).choice(len(pool), size=n, replace=False)
        out[s] = np.sort(pool[pick])
    return out


def stratum_pixel_index(change_map):
    flat = change_map.cells.ravel()
    valid = change_map.valid.ravel()
    order = np.argsort(np.where(valid, flat, -1), kind="stable")
    out = {}
    sorted_codes = np.where(valid, flat, -1)[order]
    for s in np.unique(sorted_codes):
        if s < 0:
            continue
        lo, hi = np.searchsorted(sorted_codes, [s, s + 1])
        out[int(s)] = order[lo:hi]
    return out


def draw_sample(change_map, plan, seed):
    """Stratified random pixel sample; records carry pixel-center locations.

    Record ids run from 0 in ascending (stratum, pixel index) order.
    """
    picks = draw_indices(stratum_pixel_index(change_map), plan.per_stratum_n, seed)
    ncols = change_map.header.ncols
    records = []
    for s in sorted(picks):
        for flat in picks[s]:
            r, c = divmod(int(flat), ncols)
            lon, lat = change_map.header.center(r, c)
            records.append(SampleRecord(id=len(records), location=GeoPoint(lon, lat), stratum=int(s)))
    return records


# --- consensus ----------------------------------------------------------------


@dataclass(frozen=True)
class Annotation:
    sample_id: int
    annotator: str
    year: int
    label: bool


@dataclass(frozen=True)
class Adjudication:
    sample_id: int
    year: int
    label: bool


def _resolve(votes, adjudicated):
    """(label, status) for one sample-year."""
    if adjudicated is not None:
        return adjudicated, "adjudicated"
    if not votes:
        return None, "unresolved"
    tally = Counter(votes.values())
    if len(tally) == 1:
        return next(iter(tally)), "unanimous"
    (top, k1), (_, k2) = tally.most_common(2)
    if k1 > k2:
        return top, "majority"
    return None, "unresolved"


def merge_labels(samples, annotations, adjudications=()):
    """Attach consensus reference labels to ``samples``.

    Per sample and year: an adjudication entry wins outright; otherwise a
    unanimous or strict-majority vote sets the label; a tie leaves the label
    unset. The record's status is the least resolved of its two years. Each
    annotator counts once per sample-year.
    """
    by_id = {s.id: s for s in samples}
    if len(by_id) != len(samples):
        raise ValueError("duplicate sample ids")
    votes = defaultdict(dict)
    raw = defaultdict(list)
    for a in annotations:
        if a.sample_id not in by_id:
            raise ValueError(f"annotation for unknown sample id {a.sample_id}")
        if a.year not in (2020, 2021):
            raise ValueError(f"annotation year must be 2020 or 2021, got {a.year}")
        prev = votes[(a.sample_id, a.year)].get(a.annotator)
        if prev is not None and prev != a.label:
            raise ValueError(f"annotator {a.annotator!r} gave conflicting labels for sample {a.sample_id}, {a.year}")
        if prev is None:
            raw[a.sample_id].append((a.annotator, a.year, bool(a.label)))
        votes[(a.sample_id, a.year)][a.annotator] = bool(a.label)
    adj = {}
    for d in adjudications:
        if d.sample_id not in by_id:
            raise ValueError(f"adjudication for unknown sample id {d.sample_id}")
        key = (d.sample_id, d.year)
        if key in adj and adj[key] != d.label:
            raise ValueError(f"conflicting adjudications for sample {d.sample_id}, {d.year}")
        adj[key] = bool(d.label)

    merged = []
    for s in samples:
        l20, st20 = _resolve(votes.get((s.id, 2020), {}), adj.get((s.id, 2020)))
        l21, st21 = _resolve(votes.get((s.id, 2021), {}), adj.get((s.id, 2021)))
        status = max(st20, st21, key=STATUSES.index)
        merged.append(replace(
            s,
            ref_2020=l20,
            ref_2021=l21,
            annotator_labels=tuple(sorted(raw.get(s.id, ()))),
            consensus_status=status,
        ))
    return merged
