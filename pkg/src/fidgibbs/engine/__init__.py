"""Finite (epsilon, L, M) Gibbs-field engine."""

from .brute import Census, brute_force_enumerate, census, leading_order_kink_counts, state_space_size
from .distribution import (
    SampleBatch,
    exact_sample,
    outcome_distribution,
    outcome_weights,
    trajectory_kinks,
    variable_marginal,
)
from .eliminate import EliminationPlan, eliminate, transfer_powers
from .graph import FactorGraph, Indicator, StepFactor, Variable, build_factor_graph, segment_count

__all__ = [
    "Census", "EliminationPlan", "FactorGraph", "Indicator", "SampleBatch", "StepFactor",
    "Variable", "brute_force_enumerate", "build_factor_graph", "census", "eliminate",
    "exact_sample", "leading_order_kink_counts", "outcome_distribution", "outcome_weights",
    "segment_count", "state_space_size", "trajectory_kinks", "transfer_powers",
    "variable_marginal",
]
