"""Benchmark problems and the experiment harnesses built on them."""

from .experiments import (
    DISC,
    NO_DISC,
    ExperimentResult,
    SweepResult,
    TrialResult,
    augment,
    augmented_of_size,
    data_efficiency,
    data_efficiency_sweep,
    experiment1_table,
    experiment_classic_vs_lgga,
    export_augmented,
    heldout_mse,
    minimal_size,
    solves,
    table2_csv,
)
from .problems import BenchmarkProblem, get_problem, problem_names, registry

__all__ = [
    "DISC", "NO_DISC", "BenchmarkProblem", "ExperimentResult", "SweepResult", "TrialResult",
    "augment", "augmented_of_size", "data_efficiency", "data_efficiency_sweep",
    "experiment1_table", "experiment_classic_vs_lgga", "export_augmented", "get_problem",
    "heldout_mse", "minimal_size", "problem_names", "registry", "solves", "table2_csv",
]
