"""Run configuration: strict JSON schema, defaults, and context assembly.

Unknown keys anywhere in the file are errors, not warnings; a silently
ignored typo in a long optimization run is expensive. Relative terrain paths
resolve against the config file's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .costing import CostModel, EvalContext
from .evolution import Bounds, GaConfig, route_bounds
from .geometry import KinematicLimits
from .terrain import DemGrid, LocalFrame, elevation_at, read_arcgrid, synth_terrain

# Route defaults: the I5-I405 interchange to Tejon Ranch.
DEFAULT_START = {"lat": 34.29, "lon": -118.47}
DEFAULT_END = {"lat": 34.99, "lon": -118.95}


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass
class EndpointSpec:
    lat: float
    lon: float
    elevation: float | None = None


@dataclass
class TerrainSpec:
    """Either an ArcGrid file path or a synthetic terrain recipe."""

    arcgrid: str | None = None
    synthetic: dict | None = None


@dataclass
class RunConfig:
    terrain: TerrainSpec
    start: EndpointSpec
    end: EndpointSpec
    limits: KinematicLimits
    cost_model: CostModel
    ga: GaConfig
    margin_frac: float = 0.25
    z_below: float = 1000.0
    z_above: float = 500.0
    output_dir: str = "out"
    base_dir: str = "."

    def validate(self) -> None:
        if (self.start.lat, self.start.lon) == (self.end.lat, self.end.lon):
            raise ConfigError("route endpoints must be distinct")
        self.ga.validate()
        if self.margin_frac <= 0:
            raise ConfigError("bounds.margin_frac must be positive")
        if self.terrain.arcgrid is not None:
            path = self.terrain_path()
            if not os.path.isfile(path):
                raise ConfigError(f"terrain file does not exist: {path}")

    def terrain_path(self) -> str:
        return os.path.join(self.base_dir, self.terrain.arcgrid)


@dataclass
class PreparedRun:
    """Config materialized against its terrain: everything run() needs."""

    config: RunConfig
    grid: DemGrid
    frame: LocalFrame
    endpoints: np.ndarray  # (2, 3) metric
    bounds: Bounds
    ctx: EvalContext


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(obj).__name__}")
    return obj


def _take(raw: dict, where: str, known: dict) -> dict:
    """Pop known keys with defaults; reject anything left over."""
    out = {}
    for key, default in known.items():
        out[key] = raw.pop(key) if key in raw else default
    if raw:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(raw))}")
    return out


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _parse_endpoint(raw, where: str) -> EndpointSpec:
    raw = dict(_require_mapping(raw, where))
    got = _take(raw, where, {"lat": None, "lon": None, "elevation": None})
    if got["lat"] is None or got["lon"] is None:
        raise ConfigError(f"{where} requires lat and lon")
    elev = None if got["elevation"] is None else _number(got["elevation"], f"{where}.elevation")
    return EndpointSpec(_number(got["lat"], f"{where}.lat"), _number(got["lon"], f"{where}.lon"), elev)


def _parse_terrain(raw) -> TerrainSpec:
    raw = dict(_require_mapping(raw, "terrain"))
    got = _take(raw, "terrain", {"arcgrid": None, "synthetic": None})
    if (got["arcgrid"] is None) == (got["synthetic"] is None):
        raise ConfigError("terrain requires exactly one of 'arcgrid' or 'synthetic'")
    if got["arcgrid"] is not None:
        if not isinstance(got["arcgrid"], str):
            raise ConfigError("terrain.arcgrid must be a path string")
        return TerrainSpec(arcgrid=got["arcgrid"])
    synth = dict(_require_mapping(got["synthetic"], "terrain.synthetic"))
    spec = _take(
        synth,
        "terrain.synthetic",
        {
            "kind": None,
            "params": {},
            "extent": None,
            "resolution": None,
            "origin_lat": 0.0,
            "origin_lon": 0.0,
        },
    )
    if spec["kind"] is None or spec["extent"] is None or spec["resolution"] is None:
        raise ConfigError("terrain.synthetic requires kind, extent and resolution")
    _require_mapping(spec["params"], "terrain.synthetic.params")
    return TerrainSpec(synthetic=spec)


def parse_config(data: dict, base_dir: str = ".") -> RunConfig:
    data = dict(_require_mapping(data, "config"))
    got = _take(
        data,
        "config",
        {
            "terrain": None,
            "endpoints": {"start": dict(DEFAULT_START), "end": dict(DEFAULT_END)},
            "limits": {},
            "cost_model": {},
            "ga": {},
            "bounds": {},
            "output_dir": "out",
        },
    )
    if got["terrain"] is None:
        raise ConfigError("config requires a terrain section")

    endpoints = dict(_require_mapping(got["endpoints"], "endpoints"))
    eps = _take(endpoints, "endpoints", {"start": dict(DEFAULT_START), "end": dict(DEFAULT_END)})
    start = _parse_endpoint(eps["start"], "endpoints.start")
    end = _parse_endpoint(eps["end"], "endpoints.end")

    limits_raw = dict(_require_mapping(got["limits"], "limits"))
    lim = _take(limits_raw, "limits", {"v_max": 339.0, "a_lat_max": 4.905, "grade_max": 0.06})
    try:
        limits = KinematicLimits(
            v_max=_number(lim["v_max"], "limits.v_max"),
            a_lat_max=_number(lim["a_lat_max"], "limits.a_lat_max"),
            grade_max=_number(lim["grade_max"], "limits.grade_max"),
        )
    except ValueError as exc:
        raise ConfigError(f"limits: {exc}") from None

    cost_raw = dict(_require_mapping(got["cost_model"], "cost_model"))
    cm_fields = {
        "pylon_coeff": 116.0,
        "tunnel_rate": 310_000.0,
        "penalty_coeff": 1e9,
        "penalty_fixed": 1e7,
        "min_pylon_height": 6.0,
    }
    cm = _take(cost_raw, "cost_model", cm_fields)
    try:
        model = CostModel(**{k: _number(v, f"cost_model.{k}") for k, v in cm.items()})
    except ValueError as exc:
        raise ConfigError(f"cost_model: {exc}") from None

    ga_raw = dict(_require_mapping(got["ga"], "ga"))
    ga_fields = {
        "population_size": 200,
        "generations": 100,
        "elite_count": 2,
        "immigrant_count": 4,
        "tournament_size": 3,
        "mutation_sigma_xy": None,
        "mutation_sigma_z": 15.0,
        "mutation_rate": 0.3,
        "crossover_alpha_range": [-0.25, 1.25],
        "rng_seed": 0,
        "degree": 10,
        "n_samples": 512,
    }
    ga_got = _take(ga_raw, "ga", ga_fields)
    alpha = ga_got["crossover_alpha_range"]
    if not (isinstance(alpha, (list, tuple)) and len(alpha) == 2):
        raise ConfigError("ga.crossover_alpha_range must be a [lo, hi] pair")
    try:
        ga = GaConfig(
            population_size=int(ga_got["population_size"]),
            generations=int(ga_got["generations"]),
            elite_count=int(ga_got["elite_count"]),
            immigrant_count=int(ga_got["immigrant_count"]),
            tournament_size=int(ga_got["tournament_size"]),
            mutation_sigma_xy=(
                None
                if ga_got["mutation_sigma_xy"] is None
                else _number(ga_got["mutation_sigma_xy"], "ga.mutation_sigma_xy")
            ),
            mutation_sigma_z=_number(ga_got["mutation_sigma_z"], "ga.mutation_sigma_z"),
            mutation_rate=_number(ga_got["mutation_rate"], "ga.mutation_rate"),
            crossover_alpha_range=(
                _number(alpha[0], "ga.crossover_alpha_range[0]"),
                _number(alpha[1], "ga.crossover_alpha_range[1]"),
            ),
            rng_seed=int(ga_got["rng_seed"]),
            degree=int(ga_got["degree"]),
            n_samples=int(ga_got["n_samples"]),
        )
        ga.validate()
    except ValueError as exc:
        raise ConfigError(f"ga: {exc}") from None

    bounds_raw = dict(_require_mapping(got["bounds"], "bounds"))
    bd = _take(bounds_raw, "bounds", {"margin_frac": 0.25, "z_below": 1000.0, "z_above": 500.0})

    if not isinstance(got["output_dir"], str):
        raise ConfigError("output_dir must be a string")

    cfg = RunConfig(
        terrain=_parse_terrain(got["terrain"]),
        start=start,
        end=end,
        limits=limits,
        cost_model=model,
        ga=ga,
        margin_frac=_number(bd["margin_frac"], "bounds.margin_frac"),
        z_below=_number(bd["z_below"], "bounds.z_below"),
        z_above=_number(bd["z_above"], "bounds.z_above"),
        output_dir=got["output_dir"],
        base_dir=base_dir,
    )
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file does not exist: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Materialization
# ---------------------------------------------------------------------------


def load_terrain(cfg: RunConfig) -> DemGrid:
    if cfg.terrain.arcgrid is not None:
        return read_arcgrid(cfg.terrain_path())
    spec = cfg.terrain.synthetic
    try:
        return synth_terrain(
            spec["kind"],
            spec["params"],
            extent=float(spec["extent"]),
            resolution=int(spec["resolution"]),
            origin_lat=float(spec["origin_lat"]),
            origin_lon=float(spec["origin_lon"]),
        )
    except ValueError as exc:
        raise ConfigError(f"terrain.synthetic: {exc}") from None


def prepare(cfg: RunConfig) -> PreparedRun:
    """Load terrain, project endpoints, resolve default elevations and bounds.

    Endpoint elevation defaults to terrain height at the endpoint plus the
    minimum pylon height.
    """
    grid = load_terrain(cfg)
    frame = LocalFrame.for_route(cfg.start.lat, cfg.start.lon, cfg.end.lat, cfg.end.lon)
    metric = []
    for spec in (cfg.start, cfg.end):
        x, y = frame.project(spec.lat, spec.lon)
        z = spec.elevation
        if z is None:
            z = elevation_at(grid, x, y, frame) + cfg.cost_model.min_pylon_height
        metric.append([x, y, z])
    endpoints = np.array(metric)
    bounds = route_bounds(
        grid, frame, endpoints, margin_frac=cfg.margin_frac, z_below=cfg.z_below, z_above=cfg.z_above
    )
    ctx = EvalContext(grid, frame, cfg.cost_model, cfg.limits, cfg.ga.n_samples)
    return PreparedRun(cfg, grid, frame, endpoints, bounds, ctx)


def config_echo(cfg: RunConfig, ga: GaConfig | None = None) -> dict:
    """Canonical dict of the effective configuration (defaults materialized).

    ga, when given, overrides the config's GA section; run() resolves
    derived fields (mutation_sigma_xy) and the echo should reflect what
    actually ran.
    """
    ga = ga or cfg.ga
    terrain: dict = {}
    if cfg.terrain.arcgrid is not None:
        terrain["arcgrid"] = cfg.terrain.arcgrid
    else:
        terrain["synthetic"] = cfg.terrain.synthetic
    return {
        "terrain": terrain,
        "endpoints": {
            "start": {"lat": cfg.start.lat, "lon": cfg.start.lon, "elevation": cfg.start.elevation},
            "end": {"lat": cfg.end.lat, "lon": cfg.end.lon, "elevation": cfg.end.elevation},
        },
        "limits": {
            "v_max": cfg.limits.v_max,
            "a_lat_max": cfg.limits.a_lat_max,
            "grade_max": cfg.limits.grade_max,
        },
        "cost_model": {
            "pylon_coeff": cfg.cost_model.pylon_coeff,
            "tunnel_rate": cfg.cost_model.tunnel_rate,
            "penalty_coeff": cfg.cost_model.penalty_coeff,
            "penalty_fixed": cfg.cost_model.penalty_fixed,
            "min_pylon_height": cfg.cost_model.min_pylon_height,
        },
        "ga": {
            "population_size": ga.population_size,
            "generations": ga.generations,
            "elite_count": ga.elite_count,
            "immigrant_count": ga.immigrant_count,
            "tournament_size": ga.tournament_size,
            "mutation_sigma_xy": ga.mutation_sigma_xy,
            "mutation_sigma_z": ga.mutation_sigma_z,
            "mutation_rate": ga.mutation_rate,
            "crossover_alpha_range": list(ga.crossover_alpha_range),
            "rng_seed": ga.rng_seed,
            "degree": ga.degree,
            "n_samples": ga.n_samples,
        },
        "bounds": {"margin_frac": cfg.margin_frac, "z_below": cfg.z_below, "z_above": cfg.z_above},
        "output_dir": cfg.output_dir,
    }
