from core_weights.baselines import exponential_weights, filter_weights
from core_weights.bayes import bayes_weights_general, bayes_weights_small_q, breakpoint_k, breakpoints
from core_weights.critical import (
    check_simple_condition,
    check_small_q_condition,
    critical_value,
    lower_lambda,
)
from core_weights.model import (
    FilterSpec,
    PriorEffect,
    PriorEffects,
    SparseMixture,
    SparseSolution,
    WeightSolution,
)
from core_weights.schemes import SCHEMES, compute_weights
from core_weights.sparse import sparse_optimal
from core_weights.spjotvoll import spjotvoll_weights

__all__ = [
    "PriorEffect",
    "PriorEffects",
    "WeightSolution",
    "SparseMixture",
    "SparseSolution",
    "FilterSpec",
    "critical_value",
    "lower_lambda",
    "check_small_q_condition",
    "check_simple_condition",
    "spjotvoll_weights",
    "bayes_weights_small_q",
    "breakpoint_k",
    "breakpoints",
    "bayes_weights_general",
    "sparse_optimal",
    "exponential_weights",
    "filter_weights",
    "compute_weights",
    "SCHEMES",
]
