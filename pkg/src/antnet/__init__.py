"""Elitist Ant System shortest-path search on city roadmaps with constant or
exponential pheromone deposition."""

from .colony import PathResult, SolverParams, construct_path, transition_probabilities
from .roadmap import City, EnvFeatures, Roadmap, dijkstra, extract_features, generate_roadmap
from .solver import RunReport, convergence_time, run
from .trail import ClosedFormTrail, DepositionRule, Rule, TrailState
from .tuner import FittedSeries, SweepGrid, compare_rules, predict_params

__all__ = [
    "City",
    "ClosedFormTrail",
    "DepositionRule",
    "EnvFeatures",
    "FittedSeries",
    "PathResult",
    "Roadmap",
    "Rule",
    "RunReport",
    "SolverParams",
    "SweepGrid",
    "TrailState",
    "compare_rules",
    "construct_path",
    "convergence_time",
    "dijkstra",
    "extract_features",
    "generate_roadmap",
    "predict_params",
    "run",
    "transition_probabilities",
]
