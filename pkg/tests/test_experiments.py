import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import class_grid
from cropchange.crops import ChangeClass, ChangeMap
from cropchange.estimate import estimate_change
from cropchange.experiments import (
    PUBLISHED_SEEDS,
    CandidateMap,
    RegionSpec,
    buffer_comparison,
    compare_maps,
    estimate_region,
    percent_interval,
    regional_estimates,
    subsample_experiment,
)
from cropchange.geo import GeoPoint, Polygon, WholeMap, haversine_m
from cropchange.grid import GridHeader, PixelArea, class_pixel_counts, stratum_areas
from cropchange.sampling import allocate, draw_sample
from cropchange.synth import SynthSpec, generate, symmetric_confusion

PA = PixelArea.constant(1.0)
CHANGE_TRUTH = {0: (False, False), 1: (True, True), 2: (False, True), 3: (True, False)}


def labeled_sample(mapped, truth, total_n, seed, prealloc=20):
    plan = allocate(total_n, prealloc, {k: float(v) for k, v in mapped.stratum_counts.items()})
    out = []
    for r in draw_sample(mapped, plan, seed):
        t = int(truth.cells[mapped.header.index_of(r.lon, r.lat)])
        out.append(type(r)(r.id, r.location, r.stratum, *CHANGE_TRUTH[t], (), "unanimous"))
    return out


@pytest.fixture(scope="module")
def landscape():
    spec = SynthSpec(nrows=60, ncols=60, error_matrix=symmetric_confusion(0.1), seed=3, cellsize=0.001)
    truth, mapped = generate(spec)
    return truth, mapped, labeled_sample(mapped, truth, 400, seed=5)


def test_whole_map_region_matches_unrestricted(landscape):
    _, mapped, samples = landscape
    res = estimate_region(mapped, samples, WholeMap(), PA, name="all")
    direct = estimate_change(samples, {k: float(v) for k, v in mapped.stratum_counts.items()})
    np.testing.assert_array_equal(res.change.area_ha, direct.area_ha)
    np.testing.assert_array_equal(res.change.ci95_ha, direct.ci95_ha)
    assert set(res.annual) == {2020, 2021} and not res.errors


def test_disjoint_zones_partition_areas(landscape):
    _, mapped, samples = landscape
    h = mapped.header
    x0, y0 = h.xll, h.yll
    x1, y1 = x0 + h.ncols * h.cellsize, y0 + h.nrows * h.cellsize
    xm = x0 + 30.5 * h.cellsize  # splits between pixel centers
    west = Polygon([(x0, y0), (xm, y0), (xm, y1), (x0, y1)])
    east = Polygon([(xm + 1e-9, y0), (x1, y0), (x1, y1), (xm + 1e-9, y1)])
    res = regional_estimates(mapped, samples, [RegionSpec("w", west), RegionSpec("e", east), RegionSpec("all")], PA)
    for c in range(4):
        assert res[0].stratum_areas[c] + res[1].stratum_areas[c] == res[2].stratum_areas[c]
    assert res[0].n_samples + res[1].n_samples == res[2].n_samples


def test_infeasible_zone_does_not_abort(landscape):
    _, mapped, samples = landscape
    h = mapped.header
    corner = Polygon([(h.xll, h.yll), (h.xll + 0.0025, h.yll), (h.xll + 0.0025, h.yll + 0.0025), (h.xll, h.yll + 0.0025)])
    res = regional_estimates(mapped, samples, [RegionSpec("tiny", corner), RegionSpec("all")], PA)
    assert res[0].change is None and "change" in res[0].errors
    assert res[1].change is not None


@pytest.mark.parametrize("area, ci, side, want", [
    (19.0, 17.0, 1317.0, (0, 3)),
    (28.0, 23.0, 3942.0, (0, 1)),
    (50.0, 10.0, 100.0, (40, 60)),
])
def test_percent_interval_examples(area, ci, side, want):
    assert percent_interval(area, ci, side) == want


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(1, 1e7))
def test_percent_interval_contains_point(area, ci, side):
    lo, hi = percent_interval(area, ci, side)
    assert 0 <= lo <= math.floor(area / side * 100 + 0.5) <= hi


def _event_landscape():
    """Perfect map whose loss pixels all lie within 1 km of one event."""
    n = 80
    h = GridHeader(n, n, 39.0, 13.0, 0.001)
    rng = np.random.default_rng(21)
    cells = rng.choice(3, size=(n, n), p=[0.6, 0.3, 0.1])
    event = GeoPoint(39.02, 13.06)
    lons, lats = h.centers()
    dist = np.array([[haversine_m(event, GeoPoint(lo, la)) for lo, la in zip(rl, ra)] for rl, ra in zip(lons, lats)])
    near = dist <= 1000.0
    cells[near & (rng.random((n, n)) < 0.5)] = 3
    cm = ChangeMap(h, cells)
    return cm, event, dist


def test_buffer_comparison_recovers_loss():
    cm, event, dist = _event_landscape()
    samples = labeled_sample(cm, cm, 300, seed=1)
    region = Polygon([(39.0, 13.0), (39.08, 13.0), (39.08, 13.08), (39.0, 13.08)])
    comp = buffer_comparison(cm, samples, [event], 5000.0, region, PA)
    true_loss = int((cm.cells == 3).sum())
    inside_loss, inside_ci = comp.inside.result.change[int(ChangeClass.LOSS)]
    assert inside_loss == pytest.approx(true_loss) and inside_ci == 0
    assert comp.outside.result.stratum_areas[3] == 0
    in_pixels = int(((cm.cells == 3) & (dist <= 5000.0)).sum())
    assert in_pixels == true_loss
    whole = class_pixel_counts(cm, region)
    for c in range(4):
        assert comp.inside.result.stratum_areas[c] + comp.outside.result.stratum_areas[c] == whole.get(c, 0)
    lo, hi = comp.inside.percent[3]
    assert lo <= hi


def test_buffer_covering_region_leaves_outside_infeasible():
    cm, event, _ = _event_landscape()
    samples = labeled_sample(cm, cm, 300, seed=1)
    region = Polygon([(39.0, 13.0), (39.08, 13.0), (39.08, 13.08), (39.0, 13.08)])
    comp = buffer_comparison(cm, samples, [event], 50_000.0, region, PA)
    assert comp.inside.feasible
    assert not comp.outside.feasible
    assert sum(comp.outside.result.stratum_areas.values()) == 0


def test_subsample_full_size_reproduces_full_estimate(landscape):
    _, mapped, samples = landscape
    areas = {k: float(v) for k, v in mapped.stratum_counts.items()}
    full = estimate_change(samples, areas)
    res = subsample_experiment(samples, len(samples), [1, 2, 3], areas)
    for row in res.rows:
        assert row.loss_area_ha == full.area_ha[3] and row.loss_ci95_ha == full.ci95_ha[3]
    assert res.median_area_ha == full.area_ha[3]


def test_subsample_deterministic_and_order_invariant(landscape):
    _, mapped, samples = landscape
    areas = {k: float(v) for k, v in mapped.stratum_counts.items()}
    a = subsample_experiment(samples, 150, PUBLISHED_SEEDS, areas)
    b = subsample_experiment(samples, 150, tuple(reversed(PUBLISHED_SEEDS)), areas)
    assert a.rows == subsample_experiment(samples, 150, PUBLISHED_SEEDS, areas).rows
    assert sorted(a.rows, key=lambda r: r.seed) == sorted(b.rows, key=lambda r: r.seed)
    assert a.median_area_ha == b.median_area_ha and a.mean_ci95_ha == b.mean_ci95_ha
    ok = [r.loss_area_ha for r in a.rows if not r.error]
    assert a.median_area_ha == float(np.median(ok))


def test_subsample_errors(landscape):
    _, mapped, samples = landscape
    with pytest.raises(ValueError, match="exceeds"):
        subsample_experiment(samples, len(samples) + 1, [1], {0: 1.0, 1: 1.0, 2: 1.0, 3: 1.0})


def test_subsample_infeasible_seed_recorded(landscape):
    _, mapped, samples = landscape
    areas = {k: float(v) for k, v in mapped.stratum_counts.items()}
    res = subsample_experiment(samples, 4, [1, 2], areas)
    assert all(r.error for r in res.rows)
    assert math.isnan(res.median_area_ha)


def _points(grid, labels):
    h = grid.header
    return [(*h.center(r, c), bool(labels[r][c])) for r in range(h.nrows) for c in range(h.ncols)]


def test_compare_maps_identity_complement_and_order():
    labels = [[1, 0, 1, 0], [0, 0, 1, 1]]
    native = class_grid([[40, 10, 40, 10], [10, 10, 40, 40]])
    perfect = CandidateMap("perfect", native, {40: True, 10: False})
    inverse = CandidateMap("inverse", native, {40: False, 10: True})
    res = compare_maps([inverse, perfect], _points(native, labels), n_boot=50)
    assert [r[0] for r in res] == ["perfect", "inverse"]
    assert res[0][1].cls(1).f1 == 1.0 and res[1][1].cls(1).f1 == 0.0
    assert res[0][2] == (4, 0, 0, 4)


def test_compare_maps_unmapped_code():
    native = class_grid([[40, 99]])
    cand = CandidateMap("m", native, {40: True})
    with pytest.raises(ValueError, match="99"):
        compare_maps([cand], _points(native, [[1, 0]]))
    relaxed = CandidateMap("m", native, {40: True}, default=False)
    assert compare_maps([relaxed], _points(native, [[1, 0]]), n_boot=10)[0][2] == (1, 0, 0, 1)


def test_compare_maps_published_counts():
    # a 425-pixel strip arranged to give TN=283, FP=15, FN=51, TP=76
    pred = [0] * 283 + [1] * 15 + [0] * 51 + [1] * 76
    truth = [0] * 283 + [0] * 15 + [1] * 51 + [1] * 76
    grid = class_grid([pred])
    rep = compare_maps([CandidateMap("wc", grid, {1: True, 0: False})], _points(grid, [truth]), n_boot=50)[0][1]
    c = rep.cls(1)
    assert (round(c.users_accuracy, 2), round(c.producers_accuracy, 2), round(c.f1, 2),
            round(rep.overall_accuracy, 2)) == (0.84, 0.60, 0.70, 0.84)
