"""Raster model, ESRI ASCII grid IO, and clipped pixel counting.

Grids are single-band and georeferenced in degrees, row 0 at the top. Masks
are evaluated at pixel centers: a pixel is either wholly in or wholly out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

METERS_PER_DEGREE = 2.0 * math.pi * kernels.EARTH_RADIUS_M / 360.0  # 111,194.93 m
MAX_CLASS_CODE = 255

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class GridParseError(ValueError):
    """Malformed ESRI ASCII grid; ``lineno`` is 1-based."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


@dataclass(frozen=True)
class GridHeader:
    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float = -9999

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError(f"grid must have at least one row and column, got {self.nrows}x{self.ncols}")
        if not (self.cellsize > 0 and math.isfinite(self.cellsize)):
            raise ValueError(f"cellsize must be positive and finite, got {self.cellsize}")

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def center(self, row, col):
        """(lon, lat) of the center of cell ``(row, col)``."""
        lon = self.xll + (col + 0.5) * self.cellsize
        lat = self.yll + (self.nrows - 1 - row + 0.5) * self.cellsize
        return lon, lat

    def center_lons(self):
        return self.xll + (np.arange(self.ncols) + 0.5) * self.cellsize

    def center_lats(self):
        return self.yll + (self.nrows - 1 - np.arange(self.nrows) + 0.5) * self.cellsize

    def centers(self):
        """Full (nrows, ncols) arrays of center longitudes and latitudes."""
        return np.meshgrid(self.center_lons(), self.center_lats())

    def index_of(self, lon, lat):
        """Row and column containing a point, or ``None`` when off-grid.

        Points on an interior cell edge belong to the cell to the east/south;
        the outer east and north edges are inclusive.
        """
        col = math.floor((lon - self.xll) / self.cellsize)
        row_from_bottom = math.floor((lat - self.yll) / self.cellsize)
        if col == self.ncols and math.isclose(lon, self.xll + self.ncols * self.cellsize):
            col -= 1
        if row_from_bottom == self.nrows and math.isclose(lat, self.yll + self.nrows * self.cellsize):
            row_from_bottom -= 1
        if not (0 <= col < self.ncols and 0 <= row_from_bottom < self.nrows):
            return None
        return self.nrows - 1 - row_from_bottom, col


@dataclass(frozen=True, eq=False)
class _Grid:
    header: GridHeader
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape != self.header.shape:
            raise ValueError(f"cells shape {self.cells.shape} does not match header {self.header.shape}")
        self.cells.setflags(write=False)

    @property
    def valid(self):
        return self.cells != self.header.nodata

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.header, self.cells.tobytes()))


class ClassGrid(_Grid):
    """Grid of integer class codes in [0, 255] or the nodata sentinel."""

    def __init__(self, header, cells):
        cells = np.array(cells, dtype=np.int32).reshape(header.shape)
        super().__init__(header, cells)
        if header.nodata != int(header.nodata):
            raise ValueError(f"class grid nodata must be integral, got {header.nodata}")
        codes = cells[cells != header.nodata]
        if codes.size and (codes.min() < 0 or codes.max() > MAX_CLASS_CODE):
            raise ValueError("class codes must lie in [0, 255]")

    def with_cells(self, cells):
        return type(self)(self.header, cells)

    def classes(self):
        return sorted(int(c) for c in np.unique(self.cells[self.valid]))


class RealGrid(_Grid):
    """Grid of finite reals or the nodata sentinel."""

    def __init__(self, header, cells):
        cells = np.array(cells, dtype=np.float64).reshape(header.shape)
        super().__init__(header, cells)
        if not np.isfinite(cells[cells != header.nodata]).all():
            raise ValueError("real grid values must be finite")

    def with_cells(self, cells):
        return type(self)(self.header, cells)


# --- pixel areas -------------------------------------------------------------


@dataclass(frozen=True)
class PixelArea:
    """How to convert a pixel to hectares.

    ``mode="constant"``: every pixel is ``base_area`` ha.
    ``mode="latitude"``: a cell of side ``cellsize`` degrees spans
    ``cellsize * base_area`` meters north-south and that times ``cos(lat)``
    east-west; ``base_area`` is meters per degree.
    """

    mode: str = "latitude"
    base_area: float = METERS_PER_DEGREE

    def __post_init__(self):
        if self.mode not in ("constant", "latitude"):
            raise ValueError(f"unknown pixel area mode {self.mode!r}")
        if not (self.base_area > 0 and math.isfinite(self.base_area)):
            raise ValueError("base_area must be positive and finite")

    @classmethod
    def constant(cls, hectares):
        return cls("constant", hectares)

    def row_areas(self, header):
        """Hectares per pixel for each raster row."""
        if self.mode == "constant":
            return np.full(header.nrows, float(self.base_area))
        side = header.cellsize * self.base_area
        lat = np.radians(header.center_lats())
        return side * (side * np.cos(lat)) / 10_000.0


# --- masks and counting ------------------------------------------------------


def resolve_mask(header, mask):
    """Turn a mask argument into a boolean (nrows, ncols) array or ``None``.

    ``mask`` may be ``None``, a boolean array of the grid's shape, or any
    object with a ``contains(lon, lat)`` method (see :mod:`cropchange.geo`).
    """
    if mask is None:
        return None
    if hasattr(mask, "contains"):
        lon, lat = header.centers()
        return np.asarray(mask.contains(lon.ravel(), lat.ravel()), dtype=bool).reshape(header.shape)
    arr = np.asarray(mask, dtype=bool)
    if arr.shape != header.shape:
        raise ValueError(f"mask shape {arr.shape} does not match grid {header.shape}")
    return arr


def _row_counts(grid, mask):
    keep = grid.valid
    m = resolve_mask(grid.header, mask)
    if m is not None:
        keep = keep & m
    classes = grid.classes()
    nclasses = (max(classes) + 1) if classes else 1
    codes = np.where(grid.valid, grid.cells, 0)
    return classes, kernels.row_class_counts(codes, keep, nclasses)


def class_pixel_counts(grid, mask=None):
    """Count non-nodata pixels per class, optionally clipped to a mask.

    Every class present anywhere in the grid gets an entry, zero if the mask
    excludes all of its pixels.
    """
    classes, rc = _row_counts(grid, mask)
    totals = rc.sum(axis=0)
    return {c: int(totals[c]) for c in classes}


def stratum_areas(grid, pixel_area, mask=None):
    """Hectares per class under the mask."""
    classes, rc = _row_counts(grid, mask)
    if pixel_area.mode == "constant":
        totals = rc.sum(axis=0)
        return {c: float(totals[c]) * pixel_area.base_area for c in classes}
    per_row = pixel_area.row_areas(grid.header)
    totals = per_row @ rc
    return {c: float(totals[c]) for c in classes}


# --- ESRI ASCII grid IO ------------------------------------------------------


def _parse_header(path, lines):
    values = {}
    end = len(lines) + 1
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            raise GridParseError(path, lineno, "blank line inside header")
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            if _is_number(parts[0], "real"):
                end = lineno
                break
            raise GridParseError(path, lineno, f"unknown header key {parts[0]!r}")
        if len(parts) != 2:
            raise GridParseError(path, lineno, f"expected 'key value', got {line.strip()!r}")
        if key in values:
            raise GridParseError(path, lineno, f"duplicate header key {parts[0]!r}")
        try:
            values[key] = int(parts[1]) if key in ("ncols", "nrows") else float(parts[1])
        except ValueError:
            raise GridParseError(path, lineno, f"non-numeric header value {parts[1]!r}") from None
        if len(values) == len(_HEADER_KEYS):
            break
    for key in _HEADER_KEYS[:5]:
        if key not in values:
            raise GridParseError(path, end, f"missing header key {key!r}")
    nodata = values.get("nodata_value", -9999)
    if nodata == int(nodata):
        nodata = int(nodata)
    try:
        header = GridHeader(
            ncols=values["ncols"],
            nrows=values["nrows"],
            xll=values["xllcorner"],
            yll=values["yllcorner"],
            cellsize=values["cellsize"],
            nodata=nodata,
        )
    except ValueError as exc:
        raise GridParseError(path, 1, str(exc)) from None
    return header, len(values)


def read_grid(path, kind="class"):
    """Read an ESRI ASCII grid as a :class:`ClassGrid` or :class:`RealGrid`."""
    if kind not in ("class", "real"):
        raise ValueError(f"kind must be 'class' or 'real', got {kind!r}")
    path = Path(path)
    lines = path.read_text().splitlines()
    header, nheader = _parse_header(path, lines)
    body = [(i, ln) for i, ln in enumerate(lines[nheader:], start=nheader + 1) if ln.strip()]
    if len(body) != header.nrows:
        if len(body) > header.nrows:
            lineno = body[header.nrows][0]
        else:
            lineno = (body[-1][0] if body else nheader) + 1
        raise GridParseError(path, lineno, f"expected {header.nrows} data rows, found {len(body)}")
    dtype = np.int64 if kind == "class" else np.float64
    cells = np.empty(header.shape, dtype=dtype)
    for r, (lineno, line) in enumerate(body):
        tokens = line.split()
        if len(tokens) != header.ncols:
            raise GridParseError(path, lineno, f"expected {header.ncols} values, found {len(tokens)}")
        try:
            if kind == "class":
                cells[r] = [int(t) for t in tokens]
            else:
                cells[r] = [float(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t, kind))
            raise GridParseError(path, lineno, f"non-numeric cell value {bad!r}") from None
    try:
        return ClassGrid(header, cells) if kind == "class" else RealGrid(header, cells)
    except ValueError as exc:
        raise GridParseError(path, nheader + 1, str(exc)) from None


def _is_number(token, kind):
    try:
        int(token) if kind == "class" else float(token)
    except ValueError:
        return False
    return True


def _fmt_header_number(v):
    if isinstance(v, (int, np.integer)) or float(v) == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_grid(grid, path):
    """Write ``grid`` as ESRI ASCII. Reals keep 6 significant digits."""
    h = grid.header
    nodata_txt = _fmt_header_number(h.nodata)
    out = [
        f"ncols {h.ncols}",
        f"nrows {h.nrows}",
        f"xllcorner {repr(float(h.xll))}",
        f"yllcorner {repr(float(h.yll))}",
        f"cellsize {repr(float(h.cellsize))}",
        f"NODATA_value {nodata_txt}",
    ]
    valid = grid.valid
    if isinstance(grid, ClassGrid):
        for row in grid.cells:
            out.append(" ".join(str(int(v)) for v in row))
    else:
        for row, ok in zip(grid.cells, valid):
            out.append(" ".join(format(v, ".6g") if k else nodata_txt for v, k in zip(row, ok)))
    Path(path).write_text("\n".join(out) + "\n")
