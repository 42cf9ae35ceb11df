import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import class_grid
from cropchange.crops import ChangeMap
from cropchange.geo import GeoPoint
from cropchange.grid import GridHeader
from cropchange.sampling import (
    Adjudication,
    Annotation,
    SampleRecord,
    allocate,
    draw_indices,
    draw_sample,
    merge_labels,
    stratum_pixel_index,
)


def test_allocation_prealloc_example():
    plan = allocate(400, 100, {0: 45.0, 1: 45.0, 2: 5.0, 3: 5.0})
    assert plan.per_stratum_n == {0: 90, 1: 90, 2: 110, 3: 110}
    assert plan.prealloc == {0: 0, 1: 0, 2: 100, 3: 100}


def test_largest_remainder_example():
    # quotas 5.5, 2.5, 2.0: floors 5, 2, 2; the tied .5 remainders go to the lower code
    plan = allocate(10, 0, {0: 0.55, 1: 0.25, 2: 0.20}, change_strata=())
    assert plan.per_stratum_n == {0: 6, 1: 2, 2: 2}


def test_allocation_minimum_two():
    plan = allocate(50, 0, {0: 1000.0, 1: 1.0}, change_strata=())
    assert plan.per_stratum_n[1] == 2 and sum(plan.per_stratum_n.values()) == 50


def test_allocation_zero_area_stratum():
    plan = allocate(300, 100, {0: 10.0, 1: 10.0, 2: 0.0, 3: 1.0})
    assert plan.per_stratum_n[2] == 0 and plan.prealloc[2] == 0
    assert sum(plan.per_stratum_n.values()) == 300


def test_allocation_errors():
    with pytest.raises(ValueError, match="too small"):
        allocate(201, 100, {0: 1.0, 1: 1.0, 2: 1.0, 3: 1.0})
    with pytest.raises(ValueError, match="zero"):
        allocate(10, 0, {0: 0.0, 1: 0.0})
    with pytest.raises(ValueError):
        allocate(10, 0, {0: -1.0, 1: 2.0})


area_maps = st.lists(st.floats(0.0, 1e6), min_size=4, max_size=4).filter(lambda a: sum(a) > 0)


@settings(max_examples=200, deadline=None)
@given(area_maps, st.integers(0, 60), st.integers(0, 400))
def test_allocation_invariants(areas, prealloc, extra):
    areas = dict(enumerate(areas))
    live = [s for s, a in areas.items() if a > 0]
    total = sum(prealloc for s in (2, 3) if areas[s] > 0) + 2 * len(live) + extra
    plan = allocate(total, prealloc, areas)
    n = plan.per_stratum_n
    assert sum(n.values()) == total
    for s in areas:
        assert n[s] >= plan.prealloc[s]
        if areas[s] > 0:
            assert n[s] >= 2
        else:
            assert n[s] == 0


@settings(max_examples=200, deadline=None)
@given(area_maps, st.integers(0, 3), st.floats(1.01, 10.0), st.integers(0, 300))
def test_allocation_monotone_in_area(areas, s, factor, extra):
    areas = dict(enumerate(areas))
    if areas[s] == 0:
        areas[s] = 1.0
    live = [k for k, a in areas.items() if a > 0]
    total = 2 * len(live) + extra
    before = allocate(total, 0, areas, change_strata=()).per_stratum_n[s]
    bigger = dict(areas)
    bigger[s] = areas[s] * factor
    after = allocate(total, 0, bigger, change_strata=()).per_stratum_n[s]
    assert after >= before


def _map_one_per_class():
    return ChangeMap.from_grid(class_grid([[0, 1], [2, 3]]))


def test_forced_draw():
    cm = _map_one_per_class()
    plan = allocate(8, 0, {0: 1, 1: 1, 2: 1, 3: 1}, change_strata=())
    plan = type(plan)(4, plan.prealloc, {0: 1, 1: 1, 2: 1, 3: 1})
    for seed in (0, 1, 99):
        recs = draw_sample(cm, plan, seed)
        assert [r.stratum for r in recs] == [0, 1, 2, 3]
        for r in recs:
            idx = cm.header.index_of(r.lon, r.lat)
            assert cm.cells[idx] == r.stratum


def test_draw_deterministic_and_valid():
    rng = np.random.default_rng(5)
    cm = ChangeMap.from_grid(class_grid(rng.integers(0, 4, (30, 30))))
    plan = allocate(120, 20, {k: float(v) for k, v in cm.stratum_counts.items()})
    a = draw_sample(cm, plan, 42)
    assert a == draw_sample(cm, plan, 42)
    assert a != draw_sample(cm, plan, 43)
    assert [r.id for r in a] == list(range(len(a)))
    for s, group in itertools.groupby(a, key=lambda r: r.stratum):
        group = list(group)
        assert len(group) == plan.per_stratum_n[s]
        assert len({(r.lon, r.lat) for r in group}) == len(group)
        for r in group:
            assert cm.cells[cm.header.index_of(r.lon, r.lat)] == s


def test_substreams_independent_of_other_strata():
    rng = np.random.default_rng(6)
    cm = ChangeMap.from_grid(class_grid(rng.integers(0, 4, (20, 20))))
    pix = stratum_pixel_index(cm)
    a = draw_indices(pix, {0: 5, 1: 5, 2: 5, 3: 5}, seed=3)
    b = draw_indices(pix, {3: 5, 0: 5}, seed=3)
    assert np.array_equal(a[3], b[3]) and np.array_equal(a[0], b[0])


def test_deficit_raises():
    cm = _map_one_per_class()
    with pytest.raises(ValueError, match="pixels"):
        draw_indices(stratum_pixel_index(cm), {0: 2}, seed=0)


def test_selection_frequencies_uniform():
    rng = np.random.default_rng(8)
    cells = rng.choice(4, size=(100, 100), p=[0.5, 0.3, 0.1, 0.1])
    cm = ChangeMap.from_grid(class_grid(cells))
    pix = stratum_pixel_index(cm)
    plan = {0: 50, 1: 30, 2: 10, 3: 10}
    hits = {s: np.zeros(cm.cells.size) for s in plan}
    for rep in range(500):
        for s, idx in draw_indices(pix, plan, seed=rep).items():
            hits[s][idx] += 1
    for s in plan:
        observed = hits[s][pix[s]]
        assert observed.sum() == 500 * plan[s]
        assert stats.chisquare(observed).pvalue > 0.01


def _samples(n=3):
    return [SampleRecord(i, GeoPoint(39.0, 13.0 + i * 0.001), i % 4) for i in range(n)]


def test_merge_unanimous_majority_tie():
    anns = [
        Annotation(0, "a", 2020, True), Annotation(0, "b", 2020, True),
        Annotation(0, "a", 2021, True), Annotation(0, "b", 2021, True),
        Annotation(1, "a", 2020, True), Annotation(1, "b", 2020, False), Annotation(1, "c", 2020, True),
        Annotation(1, "a", 2021, False), Annotation(1, "b", 2021, False),
        Annotation(2, "a", 2020, True), Annotation(2, "b", 2020, False),
        Annotation(2, "a", 2021, True), Annotation(2, "b", 2021, True),
    ]
    m = merge_labels(_samples(), anns)
    assert (m[0].ref_2020, m[0].ref_2021, m[0].consensus_status) == (True, True, "unanimous")
    assert (m[1].ref_2020, m[1].ref_2021, m[1].consensus_status) == (True, False, "majority")
    assert (m[2].ref_2020, m[2].consensus_status) == (None, "unresolved")
    assert m[2].reference("change") is None and m[2].reference(2021) == 1
    assert len(m[1].annotator_labels) == 5


def test_merge_adjudication_wins():
    anns = [Annotation(0, "a", 2020, True), Annotation(0, "b", 2020, False),
            Annotation(0, "a", 2021, False), Annotation(0, "b", 2021, False)]
    m = merge_labels(_samples(1), anns, [Adjudication(0, 2020, False)])
    assert (m[0].ref_2020, m[0].consensus_status) == (False, "adjudicated")


def test_merge_errors():
    with pytest.raises(ValueError, match="unknown sample"):
        merge_labels(_samples(1), [Annotation(7, "a", 2020, True)])
    with pytest.raises(ValueError, match="conflicting"):
        merge_labels(_samples(1), [Annotation(0, "a", 2020, True), Annotation(0, "a", 2020, False)])
    with pytest.raises(ValueError, match="unknown sample"):
        merge_labels(_samples(1), [], [Adjudication(5, 2020, True)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.sampled_from("abcd"), st.sampled_from([2020, 2021]),
                          st.booleans()), max_size=30, unique_by=lambda t: t[:3]),
       st.randoms())
def test_merge_permutation_invariant(raw, rnd):
    anns = [Annotation(*t) for t in raw]
    shuffled = list(anns)
    rnd.shuffle(shuffled)
    assert merge_labels(_samples(4), anns) == merge_labels(_samples(4), shuffled)


def test_reference_labelings():
    r = SampleRecord(0, GeoPoint(0, 0), 3, ref_2020=True, ref_2021=False)
    assert r.reference("change") == 3 and r.reference(2020) == 1 and r.reference("2021") == 0
    with pytest.raises(ValueError):
        r.reference("2022")
