"""Hawkes-process Generation-of-Threat (GoT) indices for football event data."""

from .core import (
    BranchingMatrix,
    DescendantMatrix,
    HawkesModel,
    as_branching,
    branching_matrix,
    descendant_matrix,
    expected_counts,
    intensity_at,
    is_stable,
    spectral_radius,
)
from .estimate import FitConfig, FitResult, fit, log_likelihood
from .estimator import HawkesExpEstimator, PointProcessBuilder
from .got import GotReport, TeamAggregate, got_report
from .simulate import StudyConfig, run_accuracy_study, sample_study_model, simulate
from .trajectory import Trajectory, concatenate

__version__ = "0.1.0"

__all__ = [
    "BranchingMatrix", "DescendantMatrix", "FitConfig", "FitResult", "GotReport",
    "HawkesExpEstimator", "HawkesModel", "PointProcessBuilder", "StudyConfig",
    "TeamAggregate", "Trajectory", "as_branching", "branching_matrix", "concatenate",
    "descendant_matrix", "expected_counts", "fit", "got_report", "intensity_at",
    "is_stable", "log_likelihood", "run_accuracy_study", "sample_study_model",
    "simulate", "spectral_radius",
]
