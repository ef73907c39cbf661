"""
core_weights/spjotvoll.py

Optimal weights for exactly known means mu_i < 0:
    w(mu) = Phi(mu/2 + c/mu) / q,   c chosen so that sum_i w_i = J.
c plays the role of log(lambda) in the Bayes solvers, and the solution
reports lambda = exp(c).
"""

import math
from typing import Sequence

import numpy as np

from core_numerics.normal import Phi, Phi_inv, phi
from core_numerics.roots import Bracket, solve_monotone
from core_weights.model import CLAMPED_MEAN, WeightSolution
from utils.exceptions import ConvergenceError, DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

_MAX_EXPANSIONS = 200


def spjotvoll_weights(mus: Sequence[float], q: float, tol: float = 1e-12, max_iter: int = 200) -> WeightSolution:
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    mu = np.array(mus, dtype=float).reshape(-1)
    J = mu.size
    if J == 0:
        return WeightSolution(np.empty(0), math.nan, q, True, 0.0, q=q, method="empty")
    if not np.all(np.isfinite(mu)):
        raise DomainError("means must be finite")

    nonneg = mu >= 0.0
    if np.any(nonneg):
        logger.warning(
            "%d of %d means are >= 0; clamped to %g for Spjotvoll weights",
            int(nonneg.sum()), J, CLAMPED_MEAN,
        )
        mu = np.where(nonneg, CLAMPED_MEAN, mu)

    if np.all(mu == mu[0]):
        # every weight is 1: Phi(mu/2 + c/mu) = q
        c = mu[0] * Phi_inv(q) - 0.5 * mu[0] ** 2
        w = np.ones(J)
        crit = np.full(J, Phi_inv(q))
    else:
        c = _solve_constant(mu, q, tol, max_iter)
        crit = 0.5 * mu + c / mu
        w = Phi(crit) / q

    objective = float(np.sum(Phi(crit - mu)))
    logger.debug("spjotvoll: c=%.17g, sum w - J = %.3e", c, w.sum() - J)
    with np.errstate(over="ignore"):
        lam = float(np.exp(c))
    return WeightSolution(w, lam, q, True, objective, q=q, method="spjotvoll")


def _solve_constant(mu: np.ndarray, q: float, tol: float, max_iter: int) -> float:
    J = mu.size

    # decreasing in c: c/mu falls as c grows because mu < 0
    def excess(c: float) -> float:
        return float(np.sum(Phi(0.5 * mu + c / mu))) / q - J

    def slope(c: float) -> float:
        return float(np.sum(phi(0.5 * mu + c / mu) / mu)) / q

    lo, hi = -1.0, 1.0
    for _ in range(_MAX_EXPANSIONS):
        if excess(lo) >= 0.0:
            break
        lo *= 2.0
    else:
        raise ConvergenceError("could not bracket the Spjotvoll constant from below", best=lo)
    for _ in range(_MAX_EXPANSIONS):
        if excess(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the Spjotvoll constant from above", best=hi)

    return solve_monotone(
        excess, Bracket.around(excess, lo, hi), tol=tol, max_iter=max_iter,
        fprime=slope, ftol=1e-10 * J,
    )
