import numpy as np
import pytest

from cropchange.synth import SynthSpec, coverage_trial, generate, symmetric_confusion


def test_identity_map_equals_truth():
    truth, mapped = generate(SynthSpec(nrows=40, ncols=40, seed=1))
    assert truth == mapped


def test_single_class_truth():
    truth, _ = generate(SynthSpec(nrows=20, ncols=30, proportions=(1, 0, 0, 0), seed=2))
    assert (truth.cells == 0).all()


def test_patches():
    truth, _ = generate(SynthSpec(nrows=20, ncols=20, patch_size=5, seed=4))
    blocks = truth.cells.reshape(4, 5, 4, 5)
    assert (blocks == blocks[:, :1, :, :1]).all()


def test_deterministic_per_seed():
    spec = SynthSpec(nrows=30, ncols=30, error_matrix=symmetric_confusion(0.2), seed=9)
    a, b = generate(spec), generate(spec)
    assert a[0] == b[0] and a[1] == b[1]
    c = generate(SynthSpec(nrows=30, ncols=30, error_matrix=symmetric_confusion(0.2), seed=10))
    assert c[1] != a[1]


def test_empirical_confusion_within_binomial_bounds():
    e = symmetric_confusion(0.1)
    truth, mapped = generate(SynthSpec(nrows=200, ncols=200, error_matrix=e, seed=13))
    t, m = truth.cells.ravel(), mapped.cells.ravel()
    for ti in range(4):
        n = int((t == ti).sum())
        counts = np.bincount(m[t == ti], minlength=4)
        for mi in range(4):
            p = e[ti, mi]
            assert abs(counts[mi] - n * p) <= 3 * np.sqrt(n * p * (1 - p)) + 1e-9


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(proportions=(0.5, 0.5, 0.5, 0.0))
    with pytest.raises(ValueError):
        SynthSpec(error_matrix=np.full((4, 4), 0.3))
    with pytest.raises(ValueError):
        SynthSpec(patch_size=0)


def test_identity_coverage_trial_is_exact():
    spec = SynthSpec(nrows=60, ncols=60, seed=5)
    res = coverage_trial(spec, n_samples=200, reps=20, prealloc=20)
    assert res.n_feasible == 20
    np.testing.assert_allclose(res.estimates, np.broadcast_to(res.true_area, res.estimates.shape), rtol=1e-12)
    assert (res.ci95 == 0).all()
    assert (res.coverage == 1.0).all()


def test_trial_reproducible():
    spec = SynthSpec(nrows=50, ncols=50, error_matrix=symmetric_confusion(0.1), seed=3)
    a = coverage_trial(spec, n_samples=200, reps=30, prealloc=20)
    b = coverage_trial(spec, n_samples=200, reps=30, prealloc=20)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    assert sum(a.plan.values()) == 200


def test_bias_shrinks_with_reps():
    spec = SynthSpec(nrows=100, ncols=100, error_matrix=symmetric_confusion(0.1), seed=17)
    small = coverage_trial(spec, n_samples=400, reps=100, prealloc=50)
    big = coverage_trial(spec, n_samples=400, reps=200, prealloc=50)
    assert (np.abs(big.bias) <= np.abs(small.bias) + 3 * big.mc_se).all()
