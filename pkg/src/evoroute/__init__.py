"""Evolutionary optimizer for smooth 3D route alignments over terrain."""

from .costing import CostBreakdown, CostModel, EvalContext, RouteMetrics, evaluate
from .evolution import Bounds, GaConfig, Population, RunHistory, RunResult, run
from .geometry import Genome, KinematicLimits, RouteSamples
from .terrain import DemGrid, LocalFrame, parse_arcgrid, serialize_arcgrid, synth_terrain

__all__ = [
    "Bounds",
    "CostBreakdown",
    "CostModel",
    "DemGrid",
    "EvalContext",
    "GaConfig",
    "Genome",
    "KinematicLimits",
    "LocalFrame",
    "Population",
    "RouteMetrics",
    "RouteSamples",
    "RunHistory",
    "RunResult",
    "evaluate",
    "parse_arcgrid",
    "run",
    "serialize_arcgrid",
    "synth_terrain",
]

__version__ = "0.1.0"
