"""Route geometry: Bezier control polygons, path sampling, curvature and grade.

All evaluation functions accept a trailing batch convention: control arrays of
shape (..., n_controls, 3) and sample arrays of shape (..., n_samples, 3), so
a whole population can be pushed through in one vectorized call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Collinear samples report this radius instead of infinity so downstream
# cost arithmetic stays finite; it satisfies any realistic curvature limit.
RADIUS_SENTINEL = 1e12

# Triangle area (m^2) below which three samples count as collinear.
AREA_TOL = 1e-6

# Horizontal separations below this are treated as vertical stacking.
_MIN_HORIZONTAL = 1e-9


@dataclass(frozen=True)
class KinematicLimits:
    """Comfort limits: design speed, lateral acceleration cap, grade cap."""

    v_max: float
    a_lat_max: float = 4.905
    grade_max: float = 0.06

    def __post_init__(self):
        if self.v_max <= 0 or self.a_lat_max <= 0 or self.grade_max <= 0:
            raise ValueError("kinematic limits must be strictly positive")
        if self.grade_max >= 1:
            raise ValueError(f"grade_max must be below 1, got {self.grade_max}")

    @property
    def r_min(self) -> float:
        """Minimum allowed horizontal curvature radius at v_max."""
        return min_radius_for_speed(self.v_max, self.a_lat_max)


@dataclass(frozen=True)
class Genome:
    """One candidate alignment: an ordered 3D Bezier control polygon.

    The first and last control points are the route endpoints and are never
    moved by any operator. The control array is made read-only on
    construction.
    """

    controls: np.ndarray

    def __post_init__(self):
        controls = np.ascontiguousarray(np.asarray(self.controls, dtype=np.float64))
        if controls.ndim != 2 or controls.shape[1] != 3:
            raise ValueError(f"controls must have shape (n, 3), got {controls.shape}")
        if controls.shape[0] < 4:
            raise ValueError(f"need at least 4 control points, got {controls.shape[0]}")
        if not np.all(np.isfinite(controls)):
            raise ValueError("control points must be finite")
        controls.setflags(write=False)
        object.__setattr__(self, "controls", controls)

    @property
    def degree(self) -> int:
        return self.controls.shape[0] - 1

    @property
    def start(self) -> np.ndarray:
        return self.controls[0]

    @property
    def end(self) -> np.ndarray:
        return self.controls[-1]


@dataclass
class RouteSamples:
    """Densely sampled route with per-sample terrain and constraint metrics.

    Geometric columns (s, x, y, z, radius, grade) come straight from the
    sampled curve; ground, kind, height_or_depth and rate are filled during
    cost evaluation. kind is one of 'elevated', 'tunneled', 'invalid'.
    """

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    ground: np.ndarray
    radius: np.ndarray
    grade: np.ndarray
    kind: np.ndarray
    height_or_depth: np.ndarray
    rate: np.ndarray

    def __post_init__(self):
        n = len(self.s)
        for name in ("x", "y", "z", "ground", "radius", "grade", "kind", "height_or_depth", "rate"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} length mismatch")
        if n < 2 or self.s[0] != 0.0 or np.any(np.diff(self.s) <= 0):
            raise ValueError("arc length must start at 0 and be strictly increasing")
        if np.any(self.radius[1:-1] <= 0):
            raise ValueError("interior curvature radii must be positive")

    def __len__(self) -> int:
        return len(self.s)


# ---------------------------------------------------------------------------
# Bezier evaluation and sampling
# ---------------------------------------------------------------------------


def bezier_point(controls: np.ndarray, t: float) -> np.ndarray:
    """Evaluate a Bezier curve at parameter t by de Casteljau recursion.

    Exact at t=0 and t=1 (returns the anchor control points bit-for-bit).
    """
    controls = np.asarray(controls, dtype=np.float64)
    if controls.ndim != 2 or controls.shape[0] < 2:
        raise ValueError("need at least 2 control points")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")
    b = controls.copy()
    for j in range(controls.shape[0] - 1):
        b = (1.0 - t) * b[:-1] + t * b[1:]
    return b[0]


def bezier_path(controls: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """de Casteljau evaluation at many parameters, batched over leading axes.

    Args:
        controls: (..., m, 3) control polygons.
        ts: (k,) parameters in [0, 1].

    Returns:
        (..., k, 3) curve points.
    """
    controls = np.asarray(controls, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    if controls.shape[-2] < 2:
        raise ValueError("need at least 2 control points")
    if ts.ndim != 1:
        raise ValueError("ts must be one-dimensional")
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("all parameters must lie in [0, 1]")

    m = controls.shape[-2]
    t = ts[:, None, None]
    # (..., k, m, 3) working triangle; each pass contracts the control axis.
    b = np.broadcast_to(
        controls[..., None, :, :], controls.shape[:-2] + (ts.shape[0], m, 3)
    ).copy()
    for _ in range(m - 1):
        b = (1.0 - t) * b[..., :-1, :] + t * b[..., 1:, :]
    return b[..., 0, :]


@lru_cache(maxsize=32)
def _bernstein_matrix(degree: int, n_samples: int) -> np.ndarray:
    """Bernstein basis at uniform parameters: (n_samples, degree+1), rows sum to 1.

    Row 0 and row -1 are exact unit vectors, so matrix sampling reproduces the
    anchor control points bit-for-bit.
    """
    ts = np.linspace(0.0, 1.0, n_samples)
    j = np.arange(degree + 1)
    binom = np.array([math.comb(degree, int(k)) for k in j], dtype=np.float64)
    basis = binom * ts[:, None] ** j * (1.0 - ts[:, None]) ** (degree - j)
    basis.setflags(write=False)
    return basis


def sample_path(genome: Genome, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample a genome at uniform parameter values with chordal arc length.

    Returns:
        (s, pts): cumulative arc length (n,) with s[0] = 0, and points (n, 3).
    """
    s, pts = sample_paths(genome.controls[None, :, :], n_samples)
    return s[0], pts[0]


def sample_paths(controls: np.ndarray, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched sample_path over (..., m, 3) control polygons.

    Uses a cached Bernstein basis matrix per (degree, n_samples); agreement
    with the de Casteljau evaluator is pinned by tests at 1e-12.
    """
    controls = np.asarray(controls, dtype=np.float64)
    if n_samples < 16:
        raise ValueError(f"n_samples must be at least 16, got {n_samples}")
    basis = _bernstein_matrix(controls.shape[-2] - 1, n_samples)
    pts = basis @ controls
    chords = np.linalg.norm(np.diff(pts, axis=-2), axis=-1)
    s = np.concatenate(
        [np.zeros(chords.shape[:-1] + (1,)), np.cumsum(chords, axis=-1)], axis=-1
    )
    return s, pts


# ---------------------------------------------------------------------------
# Finite-difference constraint metrics
# ---------------------------------------------------------------------------


def curvature_radius(p_prev, p_mid, p_next) -> float:
    """Circumradius of three points projected to the horizontal plane.

    Returns RADIUS_SENTINEL when the projections are collinear (triangle
    area under AREA_TOL). Raises ValueError on coincident projections.
    """
    pts = np.asarray([p_prev, p_mid, p_next], dtype=np.float64)[:, :2]
    a = np.linalg.norm(pts[2] - pts[1])
    b = np.linalg.norm(pts[2] - pts[0])
    c = np.linalg.norm(pts[1] - pts[0])
    if min(a, b, c) < _MIN_HORIZONTAL:
        raise ValueError("coincident projected points have no circumradius")
    u = pts[1] - pts[0]
    v = pts[2] - pts[0]
    area2 = abs(u[0] * v[1] - u[1] * v[0])  # twice the triangle area
    if area2 < 2.0 * AREA_TOL:
        return RADIUS_SENTINEL
    return float(min(a * b * c / (2.0 * area2), RADIUS_SENTINEL))


def curvature_radii(pts: np.ndarray) -> np.ndarray:
    """Per-sample circumradius along a path, batched over leading axes.

    End samples, collinear triples, and degenerate (coincident) triples all
    report RADIUS_SENTINEL.
    """
    pts = np.asarray(pts, dtype=np.float64)
    xy = pts[..., :2]
    p0 = xy[..., :-2, :]
    p1 = xy[..., 1:-1, :]
    p2 = xy[..., 2:, :]
    a = np.linalg.norm(p2 - p1, axis=-1)
    b = np.linalg.norm(p2 - p0, axis=-1)
    c = np.linalg.norm(p1 - p0, axis=-1)
    u = p1 - p0
    v = p2 - p0
    area2 = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    degenerate = (area2 < 2.0 * AREA_TOL) | (np.minimum(np.minimum(a, b), c) < _MIN_HORIZONTAL)
    interior = np.where(
        degenerate, RADIUS_SENTINEL, a * b * c / np.maximum(2.0 * area2, 1e-300)
    )
    interior = np.minimum(interior, RADIUS_SENTINEL)
    out = np.full(pts.shape[:-1], RADIUS_SENTINEL)
    out[..., 1:-1] = interior
    return out


def grade_at(p_prev, p_next) -> float:
    """Signed grade between two points: rise over horizontal run."""
    p_prev = np.asarray(p_prev, dtype=np.float64)
    p_next = np.asarray(p_next, dtype=np.float64)
    run = math.hypot(p_next[0] - p_prev[0], p_next[1] - p_prev[1])
    if run < _MIN_HORIZONTAL:
        raise ValueError("zero horizontal separation: grade is undefined")
    return float((p_next[2] - p_prev[2]) / run)


def grades(pts: np.ndarray) -> np.ndarray:
    """Per-sample signed grade along a path, batched over leading axes.

    Central differences at interior samples, one-sided at the ends.
    Vertically stacked samples produce huge grades rather than raising, so
    degenerate genomes stay rankable.
    """
    pts = np.asarray(pts, dtype=np.float64)
    out = np.empty(pts.shape[:-1])

    def signed(delta):
        run = np.linalg.norm(delta[..., :2], axis=-1)
        return delta[..., 2] / np.maximum(run, _MIN_HORIZONTAL)

    out[..., 1:-1] = signed(pts[..., 2:, :] - pts[..., :-2, :])
    out[..., 0] = signed(pts[..., 1, :] - pts[..., 0, :])
    out[..., -1] = signed(pts[..., -1, :] - pts[..., -2, :])
    return out


# ---------------------------------------------------------------------------
# Speed / radius conversions
# ---------------------------------------------------------------------------


def min_radius_for_speed(v: float, a_lat_max: float) -> float:
    """Minimum horizontal curvature radius for speed v at the lateral cap."""
    if a_lat_max <= 0:
        raise ValueError(f"a_lat_max must be positive, got {a_lat_max}")
    if v < 0:
        raise ValueError(f"speed must be non-negative, got {v}")
    return v * v / a_lat_max


def max_speed_for_radius(r: float, a_lat_max: float) -> float:
    """Maximum comfortable speed on a curve of radius r."""
    if a_lat_max <= 0:
        raise ValueError(f"a_lat_max must be positive, got {a_lat_max}")
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    return math.sqrt(r * a_lat_max)
