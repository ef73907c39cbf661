"""
core_study/procedures.py

Weighted multiple-testing procedures on a study.

weighted_bonferroni   reject P_i <= q* w_i
weighted_bh           step-up on P_i / w_i at FDR level q_fdr

Weight vectors of length J test the rows as given; length 2J means the
two-tailed layout (row i, then the mirror of row i with p-value 1 - P_i),
reduced to one outcome per id that rejects when either tail does.
"""

from typing import List, Sequence, Tuple

import numpy as np

from core_study.records import StudyLike, StudyTable, TestOutcome, as_table
from core_weights.critical import rejection_levels
from core_weights.model import WeightSolution
from utils.exceptions import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)


def _layout(table: StudyTable, weights: np.ndarray) -> Tuple[np.ndarray, bool]:
    J = len(table)
    p = table.p_current
    if weights.size == J:
        return p, False
    if weights.size == 2 * J:
        return np.concatenate([p, 1.0 - p]), True
    raise DomainError(f"{weights.size} weights for {J} rows (expected {J} or {2 * J})")


def _outcomes(table: StudyTable, weights, thresholds, p, rejected, two_tailed) -> List[TestOutcome]:
    if not two_tailed:
        return [
            TestOutcome(str(i), float(w), float(t), bool(x), float(pv), "one")
            for i, w, t, x, pv in zip(table.ids, weights, thresholds, rejected, p)
        ]
    J = len(table)
    # report the tail with the larger margin threshold - p
    margin = thresholds - p
    pick_upper = margin[J:] > margin[:J]
    idx = np.arange(J) + np.where(pick_upper, J, 0)
    either = rejected[:J] | rejected[J:]
    return [
        TestOutcome(str(name), float(weights[i]), float(thresholds[i]), bool(x), float(p[i]), "upper" if up else "lower")
        for name, i, x, up in zip(table.ids, idx, either, pick_upper)
    ]


def weighted_bonferroni(rows: StudyLike, solution: WeightSolution) -> List[TestOutcome]:
    """Reject row i when P_i <= q* w_i; a weight of 1/q* always rejects."""
    table = as_table(rows)
    w = np.asarray(solution.weights, dtype=float)
    p, two_tailed = _layout(table, w)
    thresholds = rejection_levels(w, solution.q_star)
    rejected = p <= thresholds
    outcomes = _outcomes(table, w, thresholds, p, rejected, two_tailed)
    logger.info("weighted Bonferroni at q*=%.6g: %d of %d rejected",
                solution.q_star, sum(o.rejected for o in outcomes), len(outcomes))
    return outcomes


def weighted_bh(rows: StudyLike, weights: Sequence[float], q_fdr: float) -> List[TestOutcome]:
    """Weighted Benjamini-Hochberg: with m tests and ratios R_i = P_i / w_i
    sorted ascending, reject the r smallest for the largest r with
    R_(r) <= r q_fdr / m. Zero weights never reject."""
    table = as_table(rows)
    if not 0.0 < q_fdr < 1.0:
        raise DomainError(f"q_fdr must lie in (0, 1), got {q_fdr!r}")
    w = np.asarray(weights, dtype=float).reshape(-1)
    p, two_tailed = _layout(table, w)
    m = w.size
    if m and (np.any(w < 0.0) or abs(w.sum() - m) > 1e-6 * m):
        raise DomainError(f"weights must be nonnegative and sum to {m}, got {w.sum():.10g}")

    positive = w > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(positive, p / w, np.inf)
    order = np.argsort(ratio, kind="stable")
    ranks = np.arange(1, m + 1)
    passing = np.flatnonzero(ratio[order] <= ranks * q_fdr / m)
    r = int(passing[-1]) + 1 if passing.size else 0

    thresholds = w * r * q_fdr / m if m else w
    rejected = positive & (p <= thresholds)
    outcomes = _outcomes(table, w, thresholds, p, rejected, two_tailed)
    logger.info("weighted BH at q_fdr=%.6g: step-up rank %d, %d of %d ids rejected",
                q_fdr, r, sum(o.rejected for o in outcomes), len(outcomes))
    return outcomes
