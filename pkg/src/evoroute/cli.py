"""Command-line front end: DEM validation, optimization runs, evaluation, conversions.

Exit codes: 0 success, 2 configuration or user error, 3 terrain/data error,
1 internal error. Malformed input files never produce a raw traceback.
"""

from __future__ import annotations

import dataclasses
import functools
import os
import sys

import click
import numpy as np

from . import __version__
from .artifacts import (
    ArtifactError,
    ensure_dir,
    read_genome,
    write_genome,
    write_history_csv,
    write_profile_csv,
    write_report,
    write_route_geojson,
)
from .config import ConfigError, PreparedRun, config_echo, load_config, prepare
from .costing import evaluate_with_context
from .evolution import run
from .geometry import Genome, max_speed_for_radius, min_radius_for_speed
from .plotting import plot_convergence, plot_profile
from .terrain import TerrainError, read_arcgrid

EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


def _exits_cleanly(fn):
    """Map known error families to exit codes; never dump a raw traceback."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ArtifactError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except TerrainError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except Exception as exc:  # pragma: no cover - defensive
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="evoroute")
def main():
    """Evolve smooth 3D route alignments over terrain elevation models."""


# ---------------------------------------------------------------------------
# validate-dem
# ---------------------------------------------------------------------------


@main.command("validate-dem")
@click.argument("path", type=click.Path())
@_exits_cleanly
def cmd_validate_dem(path):
    """Parse an ArcGrid file and report its dimensions and elevation range."""
    grid = read_arcgrid(path)
    lo, hi = grid.elevation_range()
    lon0, lon1 = grid.lon_bounds()
    lat0, lat1 = grid.lat_bounds()
    click.echo(f"grid: {grid.nrows}x{grid.ncols}, cellsize {grid.cellsize:g} deg")
    click.echo(f"node hull: lon [{lon0:.6f}, {lon1:.6f}], lat [{lat0:.6f}, {lat1:.6f}]")
    click.echo(f"elevation range [{lo:g}, {hi:g}] m, nodata {grid.nodata_count}")


# ---------------------------------------------------------------------------
# optimize / evaluate
# ---------------------------------------------------------------------------


def _write_route_artifacts(out_dir, prepared: PreparedRun, genome: Genome, echo: dict, seed: int, plots: bool):
    """Evaluate a genome and write report.json + profile.csv (+ figures)."""
    breakdown, metrics, samples = evaluate_with_context(genome, prepared.ctx)
    write_report(os.path.join(out_dir, "report.json"), breakdown, metrics, echo, seed)
    write_profile_csv(os.path.join(out_dir, "profile.csv"), samples)
    write_route_geojson(os.path.join(out_dir, "route.geojson"), samples, prepared.frame)
    if plots:
        plot_profile(samples, os.path.join(out_dir, "profile.png"))
    return breakdown, metrics


@main.command("optimize")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run config JSON.")
@click.option("--seed", type=int, default=None, help="Override the config rng seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel fitness evaluation threads.")
@click.option("--plots/--no-plots", default=True, show_default=True, help="Render PNG figures next to the CSV/JSON artifacts.")
@_exits_cleanly
def cmd_optimize(config_path, seed, out_dir, workers, plots):
    """Run the genetic optimizer and write all artifacts to the output directory."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg.ga = dataclasses.replace(cfg.ga, rng_seed=seed)

    if workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {workers}")
    prepared = prepare(cfg)
    out = ensure_dir(out_dir or os.path.join(cfg.base_dir, cfg.output_dir))

    result = run(cfg.ga, prepared.ctx, prepared.bounds, prepared.endpoints, workers=workers)
    echo = config_echo(cfg, ga=result.config)

    write_genome(
        os.path.join(out, "best_genome.json"),
        result.best.genome,
        prepared.frame,
        echo,
        result.config.rng_seed,
    )
    write_history_csv(os.path.join(out, "history.csv"), result.history)
    breakdown, metrics = _write_route_artifacts(
        out, prepared, result.best.genome, echo, result.config.rng_seed, plots
    )
    if plots:
        plot_convergence(result.history, os.path.join(out, "convergence.png"))

    click.echo(f"best total: ${breakdown.total:,.0f} (penalty ${breakdown.penalty_cost:,.0f})")
    click.echo(
        f"min radius {metrics.min_radius:,.0f} m, max grade {metrics.max_abs_grade:.3%}, "
        f"tunnel {metrics.tunnel_length/1000:.2f} km of {metrics.total_length/1000:.2f} km"
    )
    click.echo(f"artifacts written to {out}")


@main.command("evaluate")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run config JSON.")
@click.option("--genome", "genome_path", required=True, type=click.Path(), help="Genome JSON to price.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--plots/--no-plots", default=True, show_default=True, help="Render PNG figures next to the CSV/JSON artifacts.")
@_exits_cleanly
def cmd_evaluate(config_path, genome_path, out_dir, plots):
    """Price a stored genome against a config's terrain, without evolution."""
    cfg = load_config(config_path)
    genome = read_genome(genome_path)
    prepared = prepare(cfg)

    expected = np.asarray(prepared.endpoints)
    got = np.array([genome.controls[0], genome.controls[-1]])
    if not np.allclose(got, expected, atol=1e-6):
        raise ConfigError(
            "genome endpoints do not match the config endpoints: "
            f"genome {got.tolist()}, config {expected.tolist()}"
        )

    out = ensure_dir(out_dir or os.path.join(cfg.base_dir, cfg.output_dir))
    echo = config_echo(cfg)
    breakdown, metrics = _write_route_artifacts(out, prepared, genome, echo, cfg.ga.rng_seed, plots)
    click.echo(f"total: ${breakdown.total:,.0f} (penalty ${breakdown.penalty_cost:,.0f})")
    click.echo(
        f"min radius {metrics.min_radius:,.0f} m, max grade {metrics.max_abs_grade:.3%}, "
        f"tunnel {metrics.tunnel_length/1000:.2f} km of {metrics.total_length/1000:.2f} km"
    )


# ---------------------------------------------------------------------------
# speed
# ---------------------------------------------------------------------------


@main.command("speed")
@click.option("--speed", "speed_ms", type=float, default=None, help="Design speed in m/s.")
@click.option("--radius", "radius_m", type=float, default=None, help="Curve radius in m.")
@click.option("--a-lat", "a_lat", type=float, default=4.905, show_default=True, help="Lateral acceleration cap in m/s^2.")
@_exits_cleanly
def cmd_speed(speed_ms, radius_m, a_lat):
    """Convert between design speed and minimum curvature radius."""
    if (speed_ms is None) == (radius_m is None):
        raise ConfigError("provide exactly one of --speed or --radius")
    if a_lat <= 0:
        raise ConfigError(f"--a-lat must be positive, got {a_lat}")
    if speed_ms is not None:
        if speed_ms < 0:
            raise ConfigError(f"--speed must be non-negative, got {speed_ms}")
        r = min_radius_for_speed(speed_ms, a_lat)
        click.echo(f"speed: {speed_ms:.1f} m/s ({speed_ms*3.6:.0f} km/h)")
        click.echo(f"lateral accel cap: {a_lat:g} m/s^2")
        click.echo(f"min radius: {r:,.0f} m ({r/1000:.1f} km)")
    else:
        if radius_m < 0:
            raise ConfigError(f"--radius must be non-negative, got {radius_m}")
        v = max_speed_for_radius(radius_m, a_lat)
        click.echo(f"radius: {radius_m:,.0f} m ({radius_m/1000:.1f} km)")
        click.echo(f"lateral accel cap: {a_lat:g} m/s^2")
        click.echo(f"max speed: {v:.1f} m/s ({v*3.6:.0f} km/h)")


if __name__ == "__main__":
    main()
