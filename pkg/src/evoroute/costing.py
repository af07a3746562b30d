"""Route pricing: structure classification, cost integration, constraint penalties.

Elevated track is priced per height-squared, tunnels at a flat rate per meter.
Curvature and grade limits enter the total as steep per-sample penalties so the
optimizer can rank infeasible candidates instead of discarding them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import Genome, KinematicLimits, RouteSamples, curvature_radii, grades, sample_paths
from .terrain import DemGrid, LocalFrame, ground_elevations

# Population evaluation always proceeds in slices of this many genomes, so
# numeric results are independent of how many workers the slices are spread
# over.
EVAL_BATCH = 64

ELEVATED = "elevated"
TUNNELED = "tunneled"
INVALID = "invalid"


@dataclass(frozen=True)
class CostModel:
    """Pricing coefficients, all in dollars.

    pylon_coeff prices elevated track per meter as coeff * height^2 with
    height clamped below at min_pylon_height; tunnel_rate is a flat $/m.
    penalty_fixed and penalty_coeff shape the per-sample constraint penalty.
    """

    pylon_coeff: float = 116.0
    tunnel_rate: float = 310_000.0
    penalty_coeff: float = 1e9
    penalty_fixed: float = 1e7
    min_pylon_height: float = 6.0

    def __post_init__(self):
        if min(self.pylon_coeff, self.penalty_coeff, self.penalty_fixed, self.min_pylon_height) < 0:
            raise ValueError("cost model coefficients must be non-negative")
        if self.tunnel_rate <= 0:
            raise ValueError(f"tunnel_rate must be positive, got {self.tunnel_rate}")


@dataclass(frozen=True)
class CostBreakdown:
    """Priced route: construction components, penalties, and violation counts.

    total is always the exact sum pylon_cost + tunnel_cost + penalty_cost.
    terrain_violations counts samples that fell off the grid or touched
    nodata; each contributes a full (fixed + coeff) penalty.
    """

    pylon_cost: float
    tunnel_cost: float
    penalty_cost: float
    total: float
    curvature_violations: int
    grade_violations: int
    terrain_violations: int = 0

    @property
    def feasible(self) -> bool:
        return self.penalty_cost == 0.0


@dataclass(frozen=True)
class RouteMetrics:
    """Summary numbers for one evaluated route.

    min_radius and max_abs_grade are taken over exactly the samples the
    penalty sees (interior for curvature, all for grade), so penalty == 0
    exactly when both limits hold. mean_pylon_height averages actual
    (unclamped) heights over elevated samples; max_depth is the deepest
    ground-to-path drop over tunneled ones.
    """

    min_radius: float
    max_abs_grade: float
    tunnel_length: float
    mean_pylon_height: float
    max_depth: float
    total_length: float


class Structure(NamedTuple):
    """Structure class of one sample: kind plus pylon height or tunnel depth."""

    kind: str
    size: float


@dataclass(frozen=True)
class EvalContext:
    """Everything needed to price a genome against one terrain."""

    grid: DemGrid
    frame: LocalFrame
    model: CostModel
    limits: KinematicLimits
    n_samples: int


# ---------------------------------------------------------------------------
# Per-sample operations
# ---------------------------------------------------------------------------


def classify_sample(path_z: float, ground_z: float) -> Structure:
    """Elevated when the path is at or above ground, tunneled below."""
    if path_z >= ground_z:
        return Structure(ELEVATED, path_z - ground_z)
    return Structure(TUNNELED, ground_z - path_z)


def cost_per_meter(structure: Structure, model: CostModel) -> float:
    """Construction rate in $/m for one classified sample."""
    if structure.kind == ELEVATED:
        h = max(structure.size, model.min_pylon_height)
        return model.pylon_coeff * h * h
    if structure.kind == TUNNELED:
        return model.tunnel_rate
    raise ValueError(f"unknown structure kind {structure.kind!r}")


def penalty(
    samples: RouteSamples, limits: KinematicLimits, model: CostModel
) -> tuple[float, int, int]:
    """Curvature/grade penalty per sample.

    Each violating sample adds penalty_fixed plus penalty_coeff times the
    relative violation ((r_min - r)/r_min, (|g| - g_max)/g_max). Curvature is
    checked at interior samples (the ends have no centered estimate); grade is
    checked at every sample, one-sided at the ends, so a route cannot dive
    into its endpoints unpenalized. Returns (penalty_dollars,
    curvature_violations, grade_violations).
    """
    cost, n_curv, n_grade = _constraint_penalty(
        samples.radius[None, 1:-1], np.abs(samples.grade[None, :]), limits, model
    )
    return float(cost[0]), int(n_curv[0]), int(n_grade[0])


def _constraint_penalty(radius_int, abs_grade_int, limits, model):
    r_min = limits.r_min
    curv_mask = radius_int < r_min
    grade_mask = abs_grade_int > limits.grade_max
    curv_rel = np.where(curv_mask, (r_min - radius_int) / r_min, 0.0)
    grade_rel = np.where(grade_mask, (abs_grade_int - limits.grade_max) / limits.grade_max, 0.0)
    n_curv = curv_mask.sum(axis=-1)
    n_grade = grade_mask.sum(axis=-1)
    cost = model.penalty_fixed * (n_curv + n_grade) + model.penalty_coeff * (
        curv_rel.sum(axis=-1) + grade_rel.sum(axis=-1)
    )
    return cost, n_curv, n_grade


# ---------------------------------------------------------------------------
# Route evaluation
# ---------------------------------------------------------------------------


def _batch_eval(controls: np.ndarray, ctx: EvalContext) -> dict:
    """Vectorized evaluation of a (B, m, 3) stack of control polygons."""
    model = ctx.model
    s, pts = sample_paths(controls, ctx.n_samples)
    ground, valid = ground_elevations(ctx.grid, pts[..., 0], pts[..., 1], ctx.frame)
    radius = curvature_radii(pts)
    grade = grades(pts)

    height = np.where(valid, pts[..., 2] - np.where(valid, ground, 0.0), 0.0)
    elevated = valid & (height >= 0.0)
    tunneled = valid & ~elevated

    clamped = np.maximum(height, model.min_pylon_height)
    rate = np.where(
        elevated,
        model.pylon_coeff * clamped * clamped,
        np.where(tunneled, model.tunnel_rate, 0.0),
    )

    seg = np.diff(s, axis=-1)
    pylon_rate = np.where(elevated, rate, 0.0)
    tunnel_rate = np.where(tunneled, rate, 0.0)
    pylon_cost = np.sum(seg * 0.5 * (pylon_rate[..., :-1] + pylon_rate[..., 1:]), axis=-1)
    tunnel_cost = np.sum(seg * 0.5 * (tunnel_rate[..., :-1] + tunnel_rate[..., 1:]), axis=-1)

    constraint_cost, n_curv, n_grade = _constraint_penalty(
        radius[..., 1:-1], np.abs(grade), ctx.limits, model
    )
    n_invalid = (~valid).sum(axis=-1)
    penalty_cost = constraint_cost + n_invalid * (model.penalty_fixed + model.penalty_coeff)

    tun_f = tunneled.astype(np.float64)
    tunnel_length = np.sum(seg * 0.5 * (tun_f[..., :-1] + tun_f[..., 1:]), axis=-1)
    n_elev = elevated.sum(axis=-1)
    mean_height = np.where(
        n_elev > 0, np.sum(np.where(elevated, height, 0.0), axis=-1) / np.maximum(n_elev, 1), 0.0
    )
    max_depth = np.max(np.where(tunneled, -height, 0.0), axis=-1)

    return {
        "s": s,
        "pts": pts,
        "ground": ground,
        "valid": valid,
        "radius": radius,
        "grade": grade,
        "height": height,
        "elevated": elevated,
        "tunneled": tunneled,
        "rate": rate,
        "pylon_cost": pylon_cost,
        "tunnel_cost": tunnel_cost,
        "penalty_cost": penalty_cost,
        "curvature_violations": n_curv,
        "grade_violations": n_grade,
        "terrain_violations": n_invalid,
        "min_radius": radius[..., 1:-1].min(axis=-1),
        "max_abs_grade": np.abs(grade).max(axis=-1),
        "tunnel_length": tunnel_length,
        "mean_pylon_height": mean_height,
        "max_depth": max_depth,
        "total_length": s[..., -1],
    }


def _breakdown(out: dict, i: int) -> CostBreakdown:
    pylon = float(out["pylon_cost"][i])
    tunnel = float(out["tunnel_cost"][i])
    pen = float(out["penalty_cost"][i])
    return CostBreakdown(
        pylon_cost=pylon,
        tunnel_cost=tunnel,
        penalty_cost=pen,
        total=pylon + tunnel + pen,
        curvature_violations=int(out["curvature_violations"][i]),
        grade_violations=int(out["grade_violations"][i]),
        terrain_violations=int(out["terrain_violations"][i]),
    )


def evaluate(
    genome: Genome,
    grid: DemGrid,
    frame: LocalFrame,
    model: CostModel,
    limits: KinematicLimits,
    n_samples: int,
) -> tuple[CostBreakdown, RouteMetrics, RouteSamples]:
    """Price one genome: sample, classify, integrate cost, apply penalties.

    Construction cost is trapezoidal over chord segments (segment length
    times the mean of its endpoint rates). Samples that leave the grid hull
    or touch nodata are classified 'invalid', contribute no construction
    cost, and are penalized as infeasible.
    """
    ctx = EvalContext(grid, frame, model, limits, n_samples)
    out = _batch_eval(genome.controls[None, :, :], ctx)

    kind = np.where(out["elevated"][0], ELEVATED, np.where(out["tunneled"][0], TUNNELED, INVALID))
    samples = RouteSamples(
        s=out["s"][0],
        x=out["pts"][0, :, 0],
        y=out["pts"][0, :, 1],
        z=out["pts"][0, :, 2],
        ground=out["ground"][0],
        radius=out["radius"][0],
        grade=out["grade"][0],
        kind=kind,
        height_or_depth=np.abs(out["height"][0]),
        rate=out["rate"][0],
    )
    metrics = RouteMetrics(
        min_radius=float(out["min_radius"][0]),
        max_abs_grade=float(out["max_abs_grade"][0]),
        tunnel_length=float(out["tunnel_length"][0]),
        mean_pylon_height=float(out["mean_pylon_height"][0]),
        max_depth=float(out["max_depth"][0]),
        total_length=float(out["total_length"][0]),
    )
    return _breakdown(out, 0), metrics, samples


def evaluate_with_context(genome: Genome, ctx: EvalContext):
    return evaluate(genome, ctx.grid, ctx.frame, ctx.model, ctx.limits, ctx.n_samples)


def evaluate_population(
    controls: np.ndarray, ctx: EvalContext, workers: int = 1
) -> list[CostBreakdown]:
    """Price a (G, m, 3) stack of genomes, optionally on a thread pool.

    Work is always split into fixed EVAL_BATCH slices so results are
    bit-identical for any worker count.
    """
    controls = np.asarray(controls, dtype=np.float64)
    n = controls.shape[0]
    if n == 0:
        return []
    slices = [slice(i, min(i + EVAL_BATCH, n)) for i in range(0, n, EVAL_BATCH)]

    def one(sl: slice) -> list[CostBreakdown]:
        out = _batch_eval(controls[sl], ctx)
        return [_breakdown(out, i) for i in range(out["pylon_cost"].shape[0])]

    if workers <= 1 or len(slices) == 1:
        chunks = [one(sl) for sl in slices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, slices))
    return [b for chunk in chunks for b in chunk]
