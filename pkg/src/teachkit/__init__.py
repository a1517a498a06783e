"""Teaching-set selection for multiclass visual categories with interpretable
feedback, a stochastic learner simulator, and a human-session HTTP service."""

from .core import (
    DataError,
    Dataset,
    ExplanationMap,
    Hypothesis,
    HypothesisSpace,
    Item,
    LearnerParams,
    Strategy,
    TeachingSet,
    load_dataset,
    load_hypotheses,
    load_teaching_set,
    split_dataset,
    write_dataset,
    write_hypotheses,
    write_teaching_set,
)
from .hypothesis import HypothesisGenConfig, build_hypothesis_space, teachability_filter
from .teacher import FastEngine, TeachingContext, build_context, greedy_select, objective_value
from .simulator import SimulationReport, run_experiment, simulate_learner

__all__ = [
    "DataError",
    "Dataset",
    "ExplanationMap",
    "FastEngine",
    "Hypothesis",
    "HypothesisGenConfig",
    "HypothesisSpace",
    "Item",
    "LearnerParams",
    "SimulationReport",
    "Strategy",
    "TeachingContext",
    "TeachingSet",
    "build_context",
    "build_hypothesis_space",
    "greedy_select",
    "load_dataset",
    "load_hypotheses",
    "load_teaching_set",
    "objective_value",
    "run_experiment",
    "simulate_learner",
    "split_dataset",
    "teachability_filter",
    "write_dataset",
    "write_hypotheses",
    "write_teaching_set",
]
