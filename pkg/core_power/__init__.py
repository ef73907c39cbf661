from core_power.analytic import (
    average_power,
    deterministic_power,
    power_ratio_grid,
    sparse_power_unweighted,
)
from core_power.monte_carlo import PowerReport, monte_carlo_null_errors, monte_carlo_power
from core_power.studies import comparison_study, sparse_means_study

__all__ = [
    "deterministic_power",
    "average_power",
    "sparse_power_unweighted",
    "power_ratio_grid",
    "PowerReport",
    "monte_carlo_power",
    "monte_carlo_null_errors",
    "comparison_study",
    "sparse_means_study",
]
