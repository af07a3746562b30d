"""Artifact I/O for runs: genome JSON, report JSON, history/profile CSV, GeoJSON.

All writers are deterministic (sorted keys, repr-precision floats); only
report.json carries a timestamp, everything else is byte-stable for a fixed
config and seed.
"""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone

import numpy as np

from .costing import CostBreakdown, RouteMetrics
from .evolution import RunHistory
from .geometry import Genome, RouteSamples
from .terrain import LocalFrame

PROFILE_COLUMNS = ("s", "x", "y", "z", "ground", "class", "height_or_depth", "radius", "grade", "rate")


class ArtifactError(Exception):
    """Unreadable or malformed artifact file."""


def _dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ArtifactError(f"file does not exist: {path}") from None
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path} is not valid JSON: {exc}") from None


# ---------------------------------------------------------------------------
# Genome
# ---------------------------------------------------------------------------


def write_genome(path, genome: Genome, frame: LocalFrame, config: dict, seed: int) -> None:
    _dump_json(
        path,
        {
            "control_points": [[float(c) for c in row] for row in genome.controls],
            "frame": {
                "origin_lat": frame.origin_lat,
                "origin_lon": frame.origin_lon,
                "meters_per_deg_lat": frame.meters_per_deg_lat,
                "meters_per_deg_lon": frame.meters_per_deg_lon,
            },
            "config": config,
            "seed": seed,
        },
    )


def read_genome(path) -> Genome:
    data = _load_json(path)
    if "control_points" not in data:
        raise ArtifactError(f"{path} has no control_points field")
    try:
        return Genome(np.asarray(data["control_points"], dtype=np.float64))
    except (ValueError, TypeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


def write_report(
    path,
    breakdown: CostBreakdown,
    metrics: RouteMetrics,
    config: dict,
    seed: int,
    timestamp: bool = True,
) -> None:
    report = {
        "cost_breakdown": {
            "pylon_cost": breakdown.pylon_cost,
            "tunnel_cost": breakdown.tunnel_cost,
            "penalty_cost": breakdown.penalty_cost,
            "total": breakdown.total,
            "curvature_violations": breakdown.curvature_violations,
            "grade_violations": breakdown.grade_violations,
            "terrain_violations": breakdown.terrain_violations,
        },
        "route_metrics": {
            "min_radius": metrics.min_radius,
            "max_abs_grade": metrics.max_abs_grade,
            "tunnel_length": metrics.tunnel_length,
            "mean_pylon_height": metrics.mean_pylon_height,
            "max_depth": metrics.max_depth,
            "total_length": metrics.total_length,
        },
        "config": config,
        "seed": seed,
    }
    if timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    _dump_json(path, report)


def read_report(path) -> dict:
    return _load_json(path)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_history_csv(path, history: RunHistory) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_total", "median_total", "feasible_count"])
        for rec in history.records:
            writer.writerow([rec.generation, repr(rec.best_total), repr(rec.median_total), rec.feasible_count])


def read_history_csv(path) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return [
            {
                "generation": int(row["generation"]),
                "best_total": float(row["best_total"]),
                "median_total": float(row["median_total"]),
                "feasible_count": int(row["feasible_count"]),
            }
            for row in csv.DictReader(fh)
        ]


def write_profile_csv(path, samples: RouteSamples) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_COLUMNS)
        for i in range(len(samples)):
            writer.writerow(
                [
                    repr(float(samples.s[i])),
                    repr(float(samples.x[i])),
                    repr(float(samples.y[i])),
                    repr(float(samples.z[i])),
                    repr(float(samples.ground[i])),
                    str(samples.kind[i]),
                    repr(float(samples.height_or_depth[i])),
                    repr(float(samples.radius[i])),
                    repr(float(samples.grade[i])),
                    repr(float(samples.rate[i])),
                ]
            )


def read_profile_csv(path) -> RouteSamples:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ArtifactError(f"{path} has no profile rows")
    cols = {name: [] for name in PROFILE_COLUMNS}
    for row in rows:
        for name in PROFILE_COLUMNS:
            cols[name].append(row[name])
    num = {
        name: np.array([float(v) for v in cols[name]])
        for name in PROFILE_COLUMNS
        if name != "class"
    }
    return RouteSamples(
        s=num["s"],
        x=num["x"],
        y=num["y"],
        z=num["z"],
        ground=num["ground"],
        radius=num["radius"],
        grade=num["grade"],
        kind=np.array(cols["class"]),
        height_or_depth=num["height_or_depth"],
        rate=num["rate"],
    )


# ---------------------------------------------------------------------------
# GeoJSON
# ---------------------------------------------------------------------------


def write_route_geojson(path, samples: RouteSamples, frame: LocalFrame) -> None:
    """Route as a GeoJSON Feature with a [lon, lat, z] LineString."""
    coordinates = []
    for i in range(len(samples)):
        lat, lon = frame.unproject(float(samples.x[i]), float(samples.y[i]))
        coordinates.append([lon, lat, float(samples.z[i])])
    _dump_json(
        path,
        {
            "type": "Feature",
            "properties": {
                "total_length_m": float(samples.s[-1]),
                "crs_note": "WGS84 lon/lat degrees, elevation meters above sea level",
            },
            "geometry": {"type": "LineString", "coordinates": coordinates},
        },
    )


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
