"""Terrain elevation models: ArcGrid I/O, bilinear elevation queries, local metric frames.

Grids follow the Esri ASCII convention: a six-key header followed by row-major
elevation values with the northernmost row first. Cell values are interpreted
as node samples at cell centers; xllcorner/yllcorner register the outer corner
of the lower-left cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEGREE = math.pi * EARTH_RADIUS_M / 180.0

# Equirectangular frames are only trusted this far from their origin.
FRAME_VALIDITY_DEG = 2.0

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class TerrainError(Exception):
    """Base class for terrain-layer errors."""


class ArcGridError(TerrainError):
    """Malformed ArcGrid content."""


class OutOfBoundsError(TerrainError):
    """Elevation query outside the grid's interpolation hull."""


class NodataError(TerrainError):
    """Elevation query whose bilinear neighborhood touches a nodata cell."""


class ProjectionError(TerrainError):
    """Coordinate outside the local frame's validity region."""


# ---------------------------------------------------------------------------
# Local metric frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular projection anchored at a reference point.

    x is meters east of the origin, y meters north. Scale factors are
    evaluated once at the origin latitude, which keeps distortion below
    0.1% for the sub-degree spans this engine works with.
    """

    origin_lat: float
    origin_lon: float
    meters_per_deg_lat: float
    meters_per_deg_lon: float

    def __post_init__(self):
        if self.meters_per_deg_lat <= 0 or self.meters_per_deg_lon <= 0:
            raise ValueError("frame scale factors must be positive")
        expected = self.meters_per_deg_lat * math.cos(math.radians(self.origin_lat))
        if expected <= 0 or abs(self.meters_per_deg_lon - expected) > 0.005 * expected:
            raise ValueError(
                "meters_per_deg_lon inconsistent with cos(origin_lat) "
                f"(got {self.meters_per_deg_lon}, expected ~{expected:.3f})"
            )

    @classmethod
    def for_origin(cls, lat: float, lon: float) -> "LocalFrame":
        """Frame anchored at (lat, lon) on the spherical Earth."""
        m_lat = METERS_PER_DEGREE
        return cls(lat, lon, m_lat, m_lat * math.cos(math.radians(lat)))

    @classmethod
    def for_route(cls, lat_a: float, lon_a: float, lat_b: float, lon_b: float) -> "LocalFrame":
        """Frame anchored at the midpoint between two route endpoints."""
        return cls.for_origin(0.5 * (lat_a + lat_b), 0.5 * (lon_a + lon_b))

    def project(self, lat: float, lon: float) -> tuple[float, float]:
        """Map geographic coordinates to local (x east, y north) meters.

        Raises ProjectionError when the point is more than FRAME_VALIDITY_DEG
        from the origin in either coordinate.
        """
        if abs(lat - self.origin_lat) >= FRAME_VALIDITY_DEG or abs(lon - self.origin_lon) >= FRAME_VALIDITY_DEG:
            raise ProjectionError(
                f"({lat}, {lon}) outside the {FRAME_VALIDITY_DEG} deg validity window "
                f"of the frame at ({self.origin_lat}, {self.origin_lon})"
            )
        x = (lon - self.origin_lon) * self.meters_per_deg_lon
        y = (lat - self.origin_lat) * self.meters_per_deg_lat
        return x, y

    def unproject(self, x: float, y: float) -> tuple[float, float]:
        """Inverse of project; round-trips to 1e-9 degrees."""
        lat = self.origin_lat + y / self.meters_per_deg_lat
        lon = self.origin_lon + x / self.meters_per_deg_lon
        if abs(lat - self.origin_lat) >= FRAME_VALIDITY_DEG or abs(lon - self.origin_lon) >= FRAME_VALIDITY_DEG:
            raise ProjectionError(
                f"local point ({x}, {y}) m falls outside the frame validity window"
            )
        return lat, lon


# ---------------------------------------------------------------------------
# DEM grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DemGrid:
    """Uniform elevation raster with geographic registration.

    values is a read-only (nrows, ncols) float64 array; row 0 is the
    northernmost row. Cells holding the nodata sentinel are kept verbatim
    and flagged in nodata_mask.
    """

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float
    values: np.ndarray
    nodata_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.ncols < 2 or self.nrows < 2:
            raise ArcGridError(f"grid must be at least 2x2, got {self.nrows}x{self.ncols}")
        if not self.cellsize > 0:
            raise ArcGridError(f"cellsize must be positive, got {self.cellsize}")
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if values.shape != (self.nrows, self.ncols):
            raise ArcGridError(
                f"expected {self.nrows}x{self.ncols} values, got array of shape {values.shape}"
            )
        mask = values == self.nodata
        if not np.all(np.isfinite(values[~mask])):
            raise ArcGridError("grid contains non-finite elevations outside nodata cells")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "nodata_mask", mask)

    @property
    def nodata_count(self) -> int:
        return int(self.nodata_mask.sum())

    def elevation_range(self) -> tuple[float, float]:
        """(min, max) over valid cells."""
        valid = self.values[~self.nodata_mask]
        if valid.size == 0:
            raise NodataError("grid has no valid cells")
        return float(valid.min()), float(valid.max())

    def node_lon(self, col) -> float:
        return self.xll + (np.asarray(col) + 0.5) * self.cellsize

    def node_lat(self, row) -> float:
        return self.yll + (self.nrows - 0.5 - np.asarray(row)) * self.cellsize

    def lon_bounds(self) -> tuple[float, float]:
        """Longitude span of the node hull (first to last node center)."""
        return self.node_lon(0), self.node_lon(self.ncols - 1)

    def lat_bounds(self) -> tuple[float, float]:
        """Latitude span of the node hull (southernmost to northernmost node)."""
        return self.node_lat(self.nrows - 1), self.node_lat(0)

    def _col_index(self, lon):
        return (np.asarray(lon) - self.xll) / self.cellsize - 0.5

    def _row_index(self, lat):
        return (self.nrows - 0.5) - (np.asarray(lat) - self.yll) / self.cellsize


# ---------------------------------------------------------------------------
# ArcGrid parsing and serialization
# ---------------------------------------------------------------------------


def _is_header_line(stripped: str) -> bool:
    first = stripped.split()[0]
    return first[0].isalpha() or first[0] == "_"


def parse_arcgrid(text: str) -> DemGrid:
    """Parse Esri ASCII grid text into a DemGrid.

    Header keys are case-insensitive and may appear in any order; exactly the
    six standard keys must be present once each. Errors name the offending
    line or token.
    """
    lines = text.splitlines()
    header: dict[str, float] = {}
    data_start = len(lines)

    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if not _is_header_line(stripped):
            data_start = lineno - 1
            break
        parts = stripped.split()
        if len(parts) != 2:
            raise ArcGridError(f"malformed header line {lineno}: {stripped!r}")
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            raise ArcGridError(f"unknown header key {parts[0]!r} on line {lineno}")
        if key in header:
            raise ArcGridError(f"duplicate header key {parts[0]!r} on line {lineno}")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise ArcGridError(
                f"non-numeric value {parts[1]!r} for header key {parts[0]!r} on line {lineno}"
            ) from None

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ArcGridError(f"missing header key(s): {', '.join(missing)}")

    for key in ("ncols", "nrows"):
        if header[key] != int(header[key]):
            raise ArcGridError(f"header key {key!r} must be an integer, got {header[key]}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if ncols < 2 or nrows < 2:
        raise ArcGridError(f"grid must be at least 2x2, got {nrows}x{ncols}")

    expected = ncols * nrows
    flat = np.empty(expected, dtype=np.float64)
    count = 0
    for lineno, raw in enumerate(lines[data_start:], start=data_start + 1):
        try:
            row = np.array(raw.split(), dtype=np.float64)
        except ValueError:
            for token in raw.split():
                try:
                    float(token)
                except ValueError:
                    raise ArcGridError(
                        f"non-numeric data token {token!r} on line {lineno}"
                    ) from None
            raise ArcGridError(f"unparseable data line {lineno}") from None
        if count + row.size > expected:
            raise ArcGridError(
                f"too many data values: expected {expected}, got extra on line {lineno}"
            )
        flat[count : count + row.size] = row
        count += row.size
    if count != expected:
        rows_missing = (expected - count + ncols - 1) // ncols
        raise ArcGridError(
            f"wrong value count: expected {expected}, got {count} "
            f"(~{rows_missing} row(s) missing)"
        )

    return DemGrid(
        ncols=ncols,
        nrows=nrows,
        xll=header["xllcorner"],
        yll=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=header["nodata_value"],
        values=flat.reshape(nrows, ncols),
    )


def read_arcgrid(path) -> DemGrid:
    with open(path, "r", encoding="ascii") as fh:
        return parse_arcgrid(fh.read())


def serialize_arcgrid(grid: DemGrid) -> str:
    """Render a DemGrid back to ArcGrid text.

    Floats are written with repr precision so parse(serialize(g)) reproduces
    every header field and value bit-faithfully.
    """
    out = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {float(grid.xll)!r}",
        f"yllcorner {float(grid.yll)!r}",
        f"cellsize {float(grid.cellsize)!r}",
        f"NODATA_value {float(grid.nodata)!r}",
    ]
    for row in grid.values:
        out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def write_arcgrid(grid: DemGrid, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(serialize_arcgrid(grid))


# ---------------------------------------------------------------------------
# Elevation queries
# ---------------------------------------------------------------------------


def elevation_at(grid: DemGrid, x: float, y: float, frame: LocalFrame) -> float:
    """Bilinearly interpolated ground elevation at local (x, y) meters.

    Exact at grid nodes. Raises OutOfBoundsError outside the node hull and
    NodataError when any of the 4 surrounding nodes is a nodata cell.
    """
    try:
        lat, lon = frame.unproject(x, y)
    except ProjectionError:
        raise OutOfBoundsError(
            f"query ({x:.1f}, {y:.1f}) m outside the local frame validity window"
        ) from None
    r = float(grid._row_index(lat))
    c = float(grid._col_index(lon))
    if not (0.0 <= r <= grid.nrows - 1 and 0.0 <= c <= grid.ncols - 1):
        raise OutOfBoundsError(
            f"query ({x:.1f}, {y:.1f}) m maps to fractional cell ({r:.3f}, {c:.3f}) "
            f"outside the {grid.nrows}x{grid.ncols} node hull"
        )
    r0 = min(int(math.floor(r)), grid.nrows - 2)
    c0 = min(int(math.floor(c)), grid.ncols - 2)
    if grid.nodata_mask[r0 : r0 + 2, c0 : c0 + 2].any():
        raise NodataError(f"query ({x:.1f}, {y:.1f}) m has a nodata neighbor")
    fr = r - r0
    fc = c - c0
    v = grid.values
    return float(
        (1 - fr) * ((1 - fc) * v[r0, c0] + fc * v[r0, c0 + 1])
        + fr * ((1 - fc) * v[r0 + 1, c0] + fc * v[r0 + 1, c0 + 1])
    )


def ground_elevations(
    grid: DemGrid, x: np.ndarray, y: np.ndarray, frame: LocalFrame
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized elevation lookup for arrays of local coordinates.

    Never raises: returns (elevations, valid) where invalid entries (outside
    the node hull, outside frame validity, or touching nodata) hold NaN and
    valid is False. Callers apply their own infeasibility policy.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lat = frame.origin_lat + y / frame.meters_per_deg_lat
    lon = frame.origin_lon + x / frame.meters_per_deg_lon
    r = grid._row_index(lat)
    c = grid._col_index(lon)

    in_frame = (np.abs(lat - frame.origin_lat) < FRAME_VALIDITY_DEG) & (
        np.abs(lon - frame.origin_lon) < FRAME_VALIDITY_DEG
    )
    in_hull = (r >= 0.0) & (r <= grid.nrows - 1) & (c >= 0.0) & (c <= grid.ncols - 1)
    ok = in_frame & in_hull

    r_safe = np.where(ok, r, 0.0)
    c_safe = np.where(ok, c, 0.0)
    r0 = np.minimum(np.floor(r_safe).astype(np.intp), grid.nrows - 2)
    c0 = np.minimum(np.floor(c_safe).astype(np.intp), grid.ncols - 2)
    fr = r_safe - r0
    fc = c_safe - c0

    v = grid.values
    v00 = v[r0, c0]
    v01 = v[r0, c0 + 1]
    v10 = v[r0 + 1, c0]
    v11 = v[r0 + 1, c0 + 1]

    m = grid.nodata_mask
    touches_nodata = m[r0, c0] | m[r0, c0 + 1] | m[r0 + 1, c0] | m[r0 + 1, c0 + 1]
    valid = ok & ~touches_nodata

    elev = (1 - fr) * ((1 - fc) * v00 + fc * v01) + fr * ((1 - fc) * v10 + fc * v11)
    return np.where(valid, elev, np.nan), valid


# ---------------------------------------------------------------------------
# Synthetic test terrains
# ---------------------------------------------------------------------------

SYNTH_KINDS = ("flat", "incline", "gaussian_ridge", "valley")


def synth_terrain(
    kind: str,
    params: dict,
    extent: float,
    resolution: int,
    origin_lat: float = 0.0,
    origin_lon: float = 0.0,
) -> DemGrid:
    """Deterministic analytic terrain on a resolution x resolution node grid.

    The node hull spans `extent` meters north-south starting at the origin;
    node (row nrows-1, col 0) sits exactly at the origin. The default origin
    on the equator keeps east-west and north-south node spacing equal.

    Kinds and their params (all elevations in meters):
      flat:           elevation
      incline:        slope (fraction), axis ('x'|'y'), base
      gaussian_ridge: amplitude, sigma, position (fraction of span), axis, base
      valley:         amplitude, sigma, position, axis, base
        (inverted ridge: floor at `base` along the feature line, rising to
         base + amplitude away from it; default axis 'y' so the floor runs
         west-east)
    """
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown terrain kind {kind!r}; expected one of {SYNTH_KINDS}")

    spacing = extent / (resolution - 1)
    frame = LocalFrame.for_origin(origin_lat, origin_lon)
    cellsize = spacing / frame.meters_per_deg_lat
    nrows = ncols = resolution

    cols = np.arange(ncols, dtype=np.float64)
    rows = np.arange(nrows, dtype=np.float64)
    x = cols * cellsize * frame.meters_per_deg_lon  # east of origin node
    y = (nrows - 1 - rows) * spacing  # north of origin node
    X, Y = np.meshgrid(x, y)

    p = dict(params)

    def take(name, default=None):
        if name in p:
            return p.pop(name)
        if default is None:
            raise ValueError(f"terrain kind {kind!r} requires param {name!r}")
        return default

    if kind == "flat":
        elevation = float(take("elevation"))
        values = np.full((nrows, ncols), elevation)
    elif kind == "incline":
        slope = float(take("slope"))
        base = float(take("base", 0.0))
        axis = take("axis", "x")
        values = base + slope * (X if axis == "x" else Y)
    else:
        amplitude = float(take("amplitude"))
        sigma = float(take("sigma"))
        if amplitude <= 0:
            raise ValueError(f"amplitude must be positive, got {amplitude}")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        base = float(take("base", 0.0))
        axis = take("axis", "x" if kind == "gaussian_ridge" else "y")
        position = float(take("position", 0.5))
        u = X if axis == "x" else Y
        d = u - position * u.max()
        bump = amplitude * np.exp(-(d**2) / (2.0 * sigma**2))
        values = base + (bump if kind == "gaussian_ridge" else amplitude - bump)

    if kind in ("incline", "gaussian_ridge", "valley") and axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if p:
        raise ValueError(f"unknown params for terrain kind {kind!r}: {sorted(p)}")

    return DemGrid(
        ncols=ncols,
        nrows=nrows,
        xll=origin_lon - 0.5 * cellsize,
        yll=origin_lat - 0.5 * cellsize,
        cellsize=cellsize,
        nodata=-9999.0,
        values=values,
    )
