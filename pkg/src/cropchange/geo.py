"""Spherical distances and membership predicates for zones and event buffers.

Every region type here exposes ``contains(lon, lat)`` taking equal-length
arrays and returning a boolean array; grids and samples are clipped through
that one method. Membership is boundary inclusive throughout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .kernels import EARTH_RADIUS_M


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not (-180.0 <= self.lon <= 180.0 and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"coordinate out of range ({self.lon}, {self.lat})")


def haversine_m(a, b, radius=EARTH_RADIUS_M):
    """Great-circle distance in meters between two points on a sphere."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    s1 = math.sin((phi1 - phi2) * 0.5)
    s2 = math.sin((math.radians(a.lon) - math.radians(b.lon)) * 0.5)
    h = min(1.0, s1 * s1 + math.cos(phi1) * math.cos(phi2) * s2 * s2)
    return 2.0 * radius * math.asin(math.sqrt(h))


def _as_xy(lon, lat):
    return np.atleast_1d(np.asarray(lon, dtype=np.float64)), np.atleast_1d(np.asarray(lat, dtype=np.float64))


def _ring_array(ring):
    arr = np.asarray(ring, dtype=np.float64).reshape(-1, 2)
    if len(arr) > 1 and np.array_equal(arr[0], arr[-1]):
        arr = arr[:-1]
    if len(np.unique(arr, axis=0)) < 3:
        raise ValueError("polygon ring needs at least 3 distinct vertices")
    return arr


@dataclass(frozen=True, eq=False)
class Polygon:
    """Exterior ring plus holes, each a sequence of (lon, lat) vertices.

    Rings are implicitly closed; a repeated closing vertex is dropped.
    """

    exterior: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "exterior", _ring_array(self.exterior))
        object.__setattr__(self, "holes", tuple(_ring_array(h) for h in self.holes))

    @property
    def rings(self):
        return (self.exterior,) + self.holes

    @property
    def bounds(self):
        lo = self.exterior.min(axis=0)
        hi = self.exterior.max(axis=0)
        return lo[0], lo[1], hi[0], hi[1]

    def contains(self, lon, lat):
        return MultiPolygon((self,)).contains(lon, lat)


@dataclass(frozen=True, eq=False)
class MultiPolygon:
    """Union of polygon parts; also the in-memory form of a GeoJSON zone."""

    parts: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("multipolygon needs at least one part")

    def contains(self, lon, lat):
        x, y = _as_xy(lon, lat)
        out = np.zeros(x.shape, dtype=bool)
        for poly in self.parts:
            xmin, ymin, xmax, ymax = poly.bounds
            cand = np.flatnonzero(~out & (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax))
            if cand.size == 0:
                continue
            rings = poly.rings
            starts = np.cumsum([0] + [len(r) for r in rings])
            verts = np.concatenate(rings)
            hit = kernels.points_in_rings(x[cand], y[cand], verts[:, 0], verts[:, 1], starts)
            out[cand[hit]] = True
        return out


def in_polygon(p, poly):
    """Even-odd membership with holes excluded and boundaries inside."""
    return bool(poly.contains([p.lon], [p.lat])[0])


@dataclass(frozen=True, eq=False)
class BufferSet:
    """Union of discs of ``radius_m`` around ``centers`` (dissolved buffers)."""

    centers: tuple
    radius_m: float

    def __post_init__(self):
        pts = tuple(c if isinstance(c, GeoPoint) else GeoPoint(*c) for c in self.centers)
        if not pts:
            raise ValueError("buffer set needs at least one center")
        if not (self.radius_m > 0 and math.isfinite(self.radius_m)):
            raise ValueError(f"radius must be positive and finite, got {self.radius_m}")
        object.__setattr__(self, "centers", pts)

    @property
    def center_lons(self):
        return np.array([c.lon for c in self.centers])

    @property
    def center_lats(self):
        return np.array([c.lat for c in self.centers])

    def contains(self, lon, lat):
        x, y = _as_xy(lon, lat)
        return kernels.within_radius(x, y, self.center_lons, self.center_lats, self.radius_m)


def in_buffer(p, buf):
    """True iff the nearest center is within ``buf.radius_m`` of ``p``."""
    return any(haversine_m(p, c) <= buf.radius_m for c in buf.centers)


@dataclass(frozen=True, eq=False)
class RegionMinusBuffer:
    region: object
    buffer: BufferSet

    def contains(self, lon, lat):
        x, y = _as_xy(lon, lat)
        inside = np.asarray(self.region.contains(x, y), dtype=bool)
        idx = np.flatnonzero(inside)
        if idx.size:
            inside[idx[self.buffer.contains(x[idx], y[idx])]] = False
        return inside


def region_minus_buffer(p, region, buf):
    return in_polygon(p, region) and not in_buffer(p, buf)


@dataclass(frozen=True)
class WholeMap:
    """Admits every point."""

    def contains(self, lon, lat):
        x, _ = _as_xy(lon, lat)
        return np.ones(x.shape, dtype=bool)


@dataclass(frozen=True, eq=False)
class Intersection:
    members: tuple = field(default_factory=tuple)

    def contains(self, lon, lat):
        x, y = _as_xy(lon, lat)
        out = np.ones(x.shape, dtype=bool)
        for m in self.members:
            out &= np.asarray(m.contains(x, y), dtype=bool)
        return out


# --- GeoJSON -----------------------------------------------------------------

_NAME_KEYS = ("name", "NAME", "zone", "ZONE", "admin2", "ADM2_EN", "id")


def _geometry_parts(geom):
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    if gtype == "Polygon":
        return [Polygon(coords[0], tuple(coords[1:]))]
    if gtype == "MultiPolygon":
        return [Polygon(c[0], tuple(c[1:])) for c in coords]
    raise ValueError(f"unsupported geometry type {gtype!r}; expected Polygon or MultiPolygon")


def load_zones(path):
    """Read named polygons from a GeoJSON file, keeping file order.

    Accepts a FeatureCollection, a single Feature, or a bare geometry. Feature
    names come from the first present property among common name keys, else
    ``zone<index>``.
    """
    doc = json.loads(Path(path).read_text())
    if doc.get("type") == "FeatureCollection":
        features = doc.get("features", [])
    elif doc.get("type") == "Feature":
        features = [doc]
    else:
        features = [{"type": "Feature", "properties": {}, "geometry": doc}]
    zones = {}
    for i, feat in enumerate(features):
        props = feat.get("properties") or {}
        name = next((str(props[k]) for k in _NAME_KEYS if props.get(k) not in (None, "")), f"zone{i}")
        if name in zones:
            raise ValueError(f"{path}: duplicate zone name {name!r}")
        zones[name] = MultiPolygon(tuple(_geometry_parts(feat["geometry"])), name=name)
    if not zones:
        raise ValueError(f"{path}: no polygon features")
    return zones


def union(zones):
    """One region covering every zone in ``zones``."""
    parts = []
    for z in zones:
        parts.extend(z.parts)
    return MultiPolygon(tuple(parts), name="union")
