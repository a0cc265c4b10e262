"""Adaptive-population multi-strategy differential evolution for constrained problems."""

from .config import ConfigError, SolverConfig, load_config
from .problems import ConstrainedProblem, Evaluation, evaluate, make_problem, problem_names
from .solver import APDESolver, DEBinSolver, RunResult, de_bin_baseline, run

__all__ = [
    "APDESolver",
    "ConfigError",
    "ConstrainedProblem",
    "DEBinSolver",
    "Evaluation",
    "RunResult",
    "SolverConfig",
    "de_bin_baseline",
    "evaluate",
    "load_config",
    "make_problem",
    "problem_names",
    "run",
]

__version__ = "0.1.0"
