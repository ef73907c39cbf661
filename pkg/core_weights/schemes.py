"""
core_weights/schemes.py

One entry point for every weighting scheme the pipeline and the studies
use. Schemes without a dual variable report lambda = NaN, q* = q and
exact = True.
"""

import math
from typing import Optional

import numpy as np

from core_weights.baselines import exponential_weights, filter_weights
from core_weights.bayes import bayes_weights_general
from core_weights.critical import expected_rejections
from core_weights.model import EffectsLike, FilterSpec, WeightSolution, as_effects
from core_weights.spjotvoll import spjotvoll_weights
from utils.exceptions import DomainError

SCHEMES = ("bayes", "spjotvoll", "exponential", "filter", "unweighted")


def compute_weights(
    scheme: str,
    effs: EffectsLike,
    q: float,
    beta: Optional[float] = None,
    threshold_M: Optional[float] = None,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> WeightSolution:
    """Weights of `scheme` for the priors `effs` at per-test level q.

    spjotvoll uses the prior means as if they were the true means.
    exponential needs beta, filter needs threshold_M.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    pe = as_effects(effs)

    if scheme == "bayes":
        return bayes_weights_general(pe, q, tol=tol, max_iter=max_iter)
    if scheme == "spjotvoll":
        return spjotvoll_weights(pe.eta, q, tol=tol, max_iter=max_iter)

    if scheme == "exponential":
        if beta is None:
            raise DomainError("scheme 'exponential' needs beta")
        w = exponential_weights(pe.eta, beta, q)
    elif scheme == "filter":
        if threshold_M is None:
            raise DomainError("scheme 'filter' needs threshold_M")
        w = filter_weights(pe.eta, FilterSpec(threshold_M, q))
    else:
        w = np.ones(len(pe))

    objective = expected_rejections(w, pe.eta, pe.sigma2, q)
    return WeightSolution(w, math.nan, q, True, objective, q=q, method=scheme)
