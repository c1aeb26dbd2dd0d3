"""UAV spot-spraying mission planner.

Combines heuristic patch sequencing over a transition graph with
headland-based area-coverage planning per patch, obstacle-avoiding
transits and field containment.
"""

from ._core import BACKEND, available_backends
from .assemble import MissionPath, MissionReport, exit_transition, plan_mission, plan_mission_compare
from .coverage import (CoverageMetrics, CoveragePlan, coverage_metrics, plan_boustrophedon_reference,
                       plan_classic, plan_optimised, select_orientation)
from .geom import Point2, Polygon, Polyline
from .model import (PlannerConfig, ProblemInstance, TransitionGraph, ValidationReport,
                    build_transition_graph, classify_patches, validate_instance)
from .tsp import Budget, RefineOutcome, TspTour, init_denn, init_nn, refine_pipeline

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "Budget",
    "CoverageMetrics",
    "CoveragePlan",
    "MissionPath",
    "MissionReport",
    "PlannerConfig",
    "Point2",
    "Polygon",
    "Polyline",
    "ProblemInstance",
    "RefineOutcome",
    "TransitionGraph",
    "TspTour",
    "ValidationReport",
    "build_transition_graph",
    "classify_patches",
    "coverage_metrics",
    "exit_transition",
    "init_denn",
    "init_nn",
    "plan_boustrophedon_reference",
    "plan_classic",
    "plan_mission",
    "plan_mission_compare",
    "plan_optimised",
    "refine_pipeline",
    "select_orientation",
    "validate_instance",
]
