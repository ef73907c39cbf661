"""
core_power/analytic.py

Closed-form power of weighted Bonferroni, reported per test (the
expected number of rejections divided by J).
"""

from typing import Sequence

import numpy as np

from core_numerics.normal import Phi, Phi_inv
from core_weights.critical import expected_rejections
from core_weights.model import EffectsLike, SparseMixture, as_effects
from core_weights.sparse import sparse_optimal_arrays
from utils.exceptions import DomainError

_CAP_SLACK = 1e-9


def check_weights(weights, J: int, q: float) -> np.ndarray:
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != J:
        raise DomainError(f"{w.size} weights for {J} tests")
    if np.any(w < 0.0) or np.any(q * w > 1.0 + _CAP_SLACK):
        raise DomainError("weights must lie in [0, 1/q]")
    return w


def deterministic_power(weights: Sequence[float], mus: Sequence[float], q: float) -> float:
    """(1/J) sum_i Phi(Phi_inv(q w_i) - mu_i) for exactly known means."""
    mu = np.asarray(mus, dtype=float).reshape(-1)
    w = check_weights(weights, mu.size, q)
    if mu.size == 0:
        return 0.0
    return expected_rejections(w, mu, np.zeros_like(mu), q) / mu.size


def average_power(weights: Sequence[float], effs: EffectsLike, q: float) -> float:
    """(1/J) sum_i Phi((Phi_inv(q w_i) - eta_i) / gamma_i), the power averaged over the prior."""
    pe = as_effects(effs)
    w = check_weights(weights, len(pe), q)
    if len(pe) == 0:
        return 0.0
    return expected_rejections(w, pe.eta, pe.sigma2, q) / len(pe)


def sparse_power_unweighted(mix: SparseMixture) -> float:
    """pi0 q + pi1 Phi(Phi_inv(q) + |M|)."""
    return float(mix.pi0 * mix.q + mix.pi1 * Phi(Phi_inv(mix.q) + abs(mix.M)))


def power_ratio_grid(M_grid: Sequence[float], pi1_grid: Sequence[float], q: float) -> np.ndarray:
    """Optimal over unweighted sparse-mixture power; rows follow M_grid, columns pi1_grid."""
    M = np.asarray(M_grid, dtype=float).reshape(-1)
    pi1 = np.asarray(pi1_grid, dtype=float).reshape(-1)
    if M.size == 0 or pi1.size == 0:
        raise DomainError("power_ratio_grid needs nonempty grids")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if np.any(M >= 0.0) or np.any((pi1 <= 0.0) | (pi1 >= 1.0)):
        raise DomainError("grid needs M < 0 and pi1 in (0, 1)")

    MM, PP = np.meshgrid(M, pi1, indexing="ij")
    _, _, optimal = sparse_optimal_arrays(PP, MM, q)
    unweighted = (1.0 - PP) * q + PP * Phi(Phi_inv(q) + np.abs(MM))
    return optimal / unweighted
