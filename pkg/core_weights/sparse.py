"""
core_weights/sparse.py

Closed-form optimal weights for the two-point mean mixture: a fraction
pi0 of tests with mean 0 and pi1 with mean M < 0. Tests with equal
means share a weight, so the problem reduces to choosing (w0, w1) with
pi0 w0 + pi1 w1 = 1.
"""

import numpy as np

from core_numerics.normal import Phi, Phi_inv
from core_weights.model import SparseMixture, SparseSolution


def sparse_optimal_arrays(pi1, M, q: float):
    """Vectorized sparse_optimal over broadcastable pi1 and M arrays.

    Returns (w0, w1, power) arrays. Three regimes:
      pi1 Phi(-|M|/2) > q            all weight on the large means
      pi0 + pi1 Phi(-|M|/2) < q      small means saturate at 1/q
      otherwise                      large means reject at -|M|/2
    """
    pi1, M = np.broadcast_arrays(np.asarray(pi1, dtype=float), np.asarray(M, dtype=float))
    pi0 = 1.0 - pi1
    m = np.abs(M)
    half = Phi(-0.5 * m)

    concentrated = pi1 * half > q
    saturated = ~concentrated & (pi0 + pi1 * half < q)

    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = np.where(concentrated, 0.0, (1.0 - pi1 * half / q) / pi0)
        w1 = np.where(concentrated, 1.0 / pi1, half / q)
        power = np.where(
            concentrated,
            pi1 * Phi(Phi_inv(np.clip(q / pi1, 0.0, 1.0)) + m),
            q + pi1 * (Phi(0.5 * m) - half),
        )
        if np.any(saturated):
            level = np.clip((q - pi0) / pi1, 0.0, 1.0)
            w0 = np.where(saturated, 1.0 / q, w0)
            w1 = np.where(saturated, (q - pi0) / (q * pi1), w1)
            power = np.where(saturated, pi0 + pi1 * Phi(Phi_inv(level) + m), power)
    return w0, w1, power


def sparse_optimal(mix: SparseMixture) -> SparseSolution:
    """Optimal two-class weights and their expected power per test."""
    w0, w1, power = sparse_optimal_arrays(mix.pi1, mix.M, mix.q)
    return SparseSolution(float(w0), float(w1), float(power))
