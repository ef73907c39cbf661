"""
core_weights/baselines.py

Weighting schemes used as comparison baselines. Both return plain
weight vectors that sum to J and never exceed 1/q.
"""

import math
from typing import Sequence

import numpy as np

from core_weights.model import FilterSpec
from utils.exceptions import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)


def exponential_weights(etas: Sequence[float], beta: float, q: float) -> np.ndarray:
    """Weights proportional to exp(beta |eta_i|), scaled to sum J and capped at 1/q.

    Capped weights pass their excess to the next largest weight, walking
    down the descending order (ties in ascending index order).
    """
    if not (beta >= 0.0 and math.isfinite(beta)):
        raise DomainError(f"beta must be a finite value >= 0, got {beta!r}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    eta = np.asarray(etas, dtype=float).reshape(-1)
    J = eta.size
    if J == 0:
        return np.empty(0)

    score = beta * np.abs(eta)
    raw = np.exp(score - score.max())
    w = J * raw / raw.sum()

    cap = 1.0 / q
    order = np.argsort(-w, kind="stable")
    carry = 0.0
    capped = 0
    for i in order:
        if w[i] + carry <= cap:
            w[i] += carry
            carry = 0.0
            break
        carry = w[i] + carry - cap
        w[i] = cap
        capped += 1
    if capped:
        logger.debug("exponential weights: %d capped at 1/q, excess redistributed", capped)
    return w


def filter_weights(etas: Sequence[float], spec: FilterSpec) -> np.ndarray:
    """Equal weights J/|S| on S = {i : eta_i <= M}, zero elsewhere.

    S falls back to the ceil(Jq) smallest eta_i when fewer pass the threshold.
    """
    eta = np.asarray(etas, dtype=float).reshape(-1)
    J = eta.size
    if J == 0:
        return np.empty(0)

    selected = np.flatnonzero(eta <= spec.threshold_M)
    n_min = max(1, math.ceil(J * spec.q))
    if selected.size < n_min:
        logger.debug("filter: %d pass M=%g, testing the %d smallest instead", selected.size, spec.threshold_M, n_min)
        selected = np.argsort(eta, kind="stable")[:n_min]

    w = np.zeros(J)
    w[selected] = J / selected.size
    return w
