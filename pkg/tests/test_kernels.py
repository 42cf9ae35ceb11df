"""Numba and numpy kernels must agree element for element."""
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cropchange import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _rings(rng):
    k = int(rng.integers(3, 12))
    ang = np.sort(rng.uniform(0, 2 * np.pi, k))
    rad = rng.uniform(0.5, 2.0, k)
    ext = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    hole = 0.2 * ext
    verts = np.concatenate([ext, hole])
    return verts[:, 0], verts[:, 1], np.array([0, k, 2 * k])


@needs_numba
def test_points_in_rings_agree():
    rng = np.random.default_rng(1)
    for _ in range(30):
        rx, ry, starts = _rings(rng)
        px, py = rng.uniform(-2.5, 2.5, 500), rng.uniform(-2.5, 2.5, 500)
        # include vertices, which lie on the boundary
        px[:len(rx)], py[:len(ry)] = rx, ry
        a = kernels._points_in_rings_nb(px, py, rx, ry, starts)
        b = kernels._points_in_rings_np(px, py, rx, ry, starts)
        assert np.array_equal(a, b)
        assert a[:len(rx)].all()


@needs_numba
def test_within_radius_agree():
    rng = np.random.default_rng(2)
    for _ in range(20):
        lon, lat = rng.uniform(38, 40, 2000), rng.uniform(12, 14, 2000)
        clon, clat = rng.uniform(38, 40, 7), rng.uniform(12, 14, 7)
        r = float(rng.uniform(1000, 40000))
        a = kernels._within_radius_nb(lon, lat, clon, clat, r, kernels.EARTH_RADIUS_M)
        b = kernels._within_radius_np(lon, lat, clon, clat, r, kernels.EARTH_RADIUS_M)
        assert np.array_equal(a, b)


@needs_numba
def test_row_class_counts_agree():
    rng = np.random.default_rng(3)
    codes = rng.integers(0, 6, (37, 53))
    keep = rng.random((37, 53)) < 0.7
    a = kernels._row_class_counts_nb(codes, keep, 6)
    b = kernels._row_class_counts_np(codes, keep, 6)
    assert np.array_equal(a, b)
    assert a.sum() == keep.sum()


def test_row_class_counts_oracle():
    codes = np.array([[0, 1, 1], [2, 2, 0]])
    keep = np.array([[True, True, False], [True, True, True]])
    assert kernels.row_class_counts(codes, keep, 3).tolist() == [[1, 1, 0], [1, 0, 2]]


def test_within_radius_empty_inputs():
    out = kernels.within_radius(np.empty(0), np.empty(0), np.array([0.0]), np.array([0.0]), 10.0)
    assert out.shape == (0,)


def test_env_flag_selects_numpy():
    code = "from cropchange import _accel; print(_accel.backend_name())"
    env = dict(os.environ, CROPCHANGE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["CROPCHANGE_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if _accel.HAVE_NUMBA else "numpy")


def test_dispatch_follows_flag(monkeypatch):
    rng = np.random.default_rng(4)
    lon, lat = rng.uniform(38, 40, 300), rng.uniform(12, 14, 300)
    clon, clat = np.array([39.0]), np.array([13.0])
    results = []
    for flag in (False, True):
        monkeypatch.setattr(_accel, "USE_NUMBA", flag and _accel.HAVE_NUMBA)
        results.append(kernels.within_radius(lon, lat, clon, clat, 50_000.0))
    assert np.array_equal(*results)


def test_benchmark_smoke():
    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    res = subprocess.run([sys.executable, str(script), "--size", "30", "--repeat", "1"],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
    lines = res.stdout.splitlines()
    assert len(lines) == 5 and all(line.endswith("True") for line in lines[2:])
