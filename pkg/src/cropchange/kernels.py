"""Per-pixel inner loops, each with a numba and a numpy implementation.

The public names at the bottom dispatch on :data:`cropchange._accel.USE_NUMBA`.
Both implementations evaluate the same floating-point expressions in the same
order, so they agree element for element.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# mean radius; one degree of arc is 111,194.93 m
EARTH_RADIUS_M = 6_371_000.0


# --- point in polygon (even-odd, boundary inclusive) -------------------------


@njit(cache=True)
def _points_in_rings_nb(px, py, ring_x, ring_y, ring_start):
    n = px.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    nrings = ring_start.shape[0] - 1
    for k in range(n):
        x = px[k]
        y = py[k]
        inside = False
        on_edge = False
        for r in range(nrings):
            lo = ring_start[r]
            hi = ring_start[r + 1]
            j = hi - 1
            for i in range(lo, hi):
                xi = ring_x[i]
                yi = ring_y[i]
                xj = ring_x[j]
                yj = ring_y[j]
                cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi)
                if (
                    cross == 0.0
                    and min(xi, xj) <= x <= max(xi, xj)
                    and min(yi, yj) <= y <= max(yi, yj)
                ):
                    on_edge = True
                    break
                if (yi > y) != (yj > y):
                    xcross = (xj - xi) * (y - yi) / (yj - yi) + xi
                    if x < xcross:
                        inside = not inside
                j = i
            if on_edge:
                break
        out[k] = on_edge or inside
    return out


def _points_in_rings_np(px, py, ring_x, ring_y, ring_start):
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    inside = np.zeros(px.shape[0], dtype=bool)
    on_edge = np.zeros(px.shape[0], dtype=bool)
    for r in range(ring_start.shape[0] - 1):
        lo, hi = int(ring_start[r]), int(ring_start[r + 1])
        j = hi - 1
        for i in range(lo, hi):
            xi, yi, xj, yj = ring_x[i], ring_y[i], ring_x[j], ring_y[j]
            cross = (xj - xi) * (py - yi) - (yj - yi) * (px - xi)
            on_edge |= (
                (cross == 0.0)
                & (min(xi, xj) <= px)
                & (px <= max(xi, xj))
                & (min(yi, yj) <= py)
                & (py <= max(yi, yj))
            )
            straddle = (yi > py) != (yj > py)
            if yj != yi:
                xcross = (xj - xi) * (py - yi) / (yj - yi) + xi
                inside ^= straddle & (px < xcross)
            j = i
    return on_edge | inside


# --- geodesic buffer membership ---------------------------------------------


@njit(cache=True)
def _within_radius_nb(lon, lat, clon, clat, radius_m, earth_radius):
    n = lon.shape[0]
    m = clon.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    deg = math.pi / 180.0
    clat_r = np.empty(m)
    clon_r = np.empty(m)
    ccos = np.empty(m)
    for c in range(m):
        clat_r[c] = clat[c] * deg
        clon_r[c] = clon[c] * deg
        ccos[c] = math.cos(clat_r[c])
    for k in range(n):
        phi = lat[k] * deg
        lam = lon[k] * deg
        cphi = math.cos(phi)
        for c in range(m):
            dphi = phi - clat_r[c]
            # meridional separation is a lower bound on great-circle distance
            if abs(dphi) * earth_radius > radius_m:
                continue
            dlam = lam - clon_r[c]
            s1 = math.sin(dphi * 0.5)
            s2 = math.sin(dlam * 0.5)
            a = s1 * s1 + cphi * ccos[c] * s2 * s2
            if a > 1.0:
                a = 1.0
            d = 2.0 * earth_radius * math.asin(math.sqrt(a))
            if d <= radius_m:
                out[k] = True
                break
    return out


def _within_radius_np(lon, lat, clon, clat, radius_m, earth_radius):
    deg = math.pi / 180.0
    phi = np.asarray(lat, dtype=np.float64) * deg
    lam = np.asarray(lon, dtype=np.float64) * deg
    cphi = np.cos(phi)
    out = np.zeros(phi.shape[0], dtype=bool)
    for c in range(len(clon)):
        cl = clat[c] * deg
        cc = math.cos(cl)
        todo = np.flatnonzero(~out)
        if todo.size == 0:
            break
        dphi = phi[todo] - cl
        near = np.abs(dphi) * earth_radius <= radius_m
        todo = todo[near]
        dphi = dphi[near]
        dlam = lam[todo] - clon[c] * deg
        s1 = np.sin(dphi * 0.5)
        s2 = np.sin(dlam * 0.5)
        a = np.minimum(s1 * s1 + cphi[todo] * cc * s2 * s2, 1.0)
        d = 2.0 * earth_radius * np.arcsin(np.sqrt(a))
        out[todo[d <= radius_m]] = True
    return out


# --- per-row class histogram -------------------------------------------------


@njit(cache=True)
def _row_class_counts_nb(codes, keep, nclasses):
    nrows, ncols = codes.shape
    out = np.zeros((nrows, nclasses), dtype=np.int64)
    for r in range(nrows):
        for c in range(ncols):
            if keep[r, c]:
                out[r, codes[r, c]] += 1
    return out


def _row_class_counts_np(codes, keep, nclasses):
    nrows = codes.shape[0]
    rows = np.broadcast_to(np.arange(nrows)[:, None], codes.shape)[keep]
    flat = rows.astype(np.int64) * nclasses + codes[keep].astype(np.int64)
    counts = np.bincount(flat, minlength=nrows * nclasses)
    return counts.reshape(nrows, nclasses)


# --- dispatch ---------------------------------------------------------------


def points_in_rings(px, py, ring_x, ring_y, ring_start):
    """Boolean membership of points in the even-odd union of rings.

    Points on any ring edge count as inside. ``ring_start`` holds the offsets
    of each ring in the concatenated vertex arrays plus a final end offset.
    """
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    ring_x = np.ascontiguousarray(ring_x, dtype=np.float64)
    ring_y = np.ascontiguousarray(ring_y, dtype=np.float64)
    ring_start = np.ascontiguousarray(ring_start, dtype=np.int64)
    if _accel.USE_NUMBA:
        return _points_in_rings_nb(px, py, ring_x, ring_y, ring_start)
    return _points_in_rings_np(px, py, ring_x, ring_y, ring_start)


def within_radius(lon, lat, clon, clat, radius_m, earth_radius=EARTH_RADIUS_M):
    """True where the haversine distance to the nearest center is <= radius."""
    lon = np.ascontiguousarray(lon, dtype=np.float64)
    lat = np.ascontiguousarray(lat, dtype=np.float64)
    clon = np.ascontiguousarray(clon, dtype=np.float64)
    clat = np.ascontiguousarray(clat, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _within_radius_nb(lon, lat, clon, clat, float(radius_m), float(earth_radius))
    return _within_radius_np(lon, lat, clon, clat, float(radius_m), float(earth_radius))


def row_class_counts(codes, keep, nclasses):
    """Histogram of ``codes`` per raster row over cells where ``keep`` is set."""
    codes = np.ascontiguousarray(codes)
    keep = np.ascontiguousarray(keep, dtype=np.bool_)
    if _accel.USE_NUMBA:
        return _row_class_counts_nb(codes, keep, int(nclasses))
    return _row_class_counts_np(codes, keep, int(nclasses))
