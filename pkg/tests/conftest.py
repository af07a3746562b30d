"""Shared fixtures: synthetic terrains, frames, and endpoint helpers."""

import json

import numpy as np
import pytest

from evoroute.costing import CostModel, EvalContext
from evoroute.geometry import KinematicLimits
from evoroute.terrain import METERS_PER_DEGREE, LocalFrame, elevation_at, synth_terrain


def grid_latlon(x_m: float, y_m: float) -> tuple[float, float]:
    """lat/lon of a metric point in the default synthetic grid placement
    (origin node at 0N 0E on the equator)."""
    return y_m / METERS_PER_DEGREE, x_m / METERS_PER_DEGREE


def route_endpoints(grid, x0, x1, y, z=None, hmin=6.0) -> np.ndarray:
    """Metric (2, 3) endpoints on a synthetic grid, z defaulting to ground + hmin."""
    frame = LocalFrame.for_origin(0.0, 0.0)
    eps = []
    for x in (x0, x1):
        zz = z if z is not None else elevation_at(grid, x, y, frame) + hmin
        eps.append([x, y, zz])
    return np.array(eps, dtype=np.float64)


@pytest.fixture
def equator_frame():
    return LocalFrame.for_origin(0.0, 0.0)


@pytest.fixture
def flat_grid():
    return synth_terrain("flat", {"elevation": 0.0}, extent=14000, resolution=32)


@pytest.fixture
def flat_ctx(flat_grid, equator_frame):
    return EvalContext(
        flat_grid, equator_frame, CostModel(), KinematicLimits(v_max=339.0), 256
    )


def write_config(path, **overrides) -> str:
    """Small flat-terrain run config for CLI tests; overrides merge shallowly."""
    cfg = {
        "terrain": {
            "synthetic": {
                "kind": "flat",
                "extent": 14000,
                "resolution": 32,
                "params": {"elevation": 0.0},
            }
        },
        "endpoints": {
            "start": {"lat": grid_latlon(2000, 7000)[0], "lon": grid_latlon(2000, 7000)[1]},
            "end": {"lat": grid_latlon(12000, 7000)[0], "lon": grid_latlon(12000, 7000)[1]},
        },
        "ga": {
            "population_size": 40,
            "generations": 8,
            "n_samples": 64,
            "rng_seed": 11,
        },
        "bounds": {"margin_frac": 0.25, "z_below": 50, "z_above": 100},
        "output_dir": "out",
    }
    for key, value in overrides.items():
        if key != "terrain" and isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2)
    return str(path)
