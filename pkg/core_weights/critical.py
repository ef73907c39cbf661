"""
core_weights/critical.py

The optimal critical value c1(eta, gamma; lambda), the lower dual bound
l(eta, gamma) and the two applicability checks for the small-q solver.

The array kernels (c1_kernel, dc1_kernel, lower_lambda_kernel) work on
log(lambda) and on sigma2 = gamma^2 - 1 directly, which keeps them
accurate as sigma -> 0. Public scalar operations wrap them.
"""

import math
from dataclasses import dataclass

import numpy as np

from core_numerics.normal import Phi, Phi_inv
from core_weights.model import CLAMPED_MEAN, SIGMA2_ZERO, EffectsLike, PriorEffect, as_effects
from utils.exceptions import DomainError


def c1_kernel(eta: np.ndarray, sigma2: np.ndarray, log_lam) -> np.ndarray:
    """Smaller root c1 for every entry; NaN where the discriminant is negative.

    For eta <= 0 the rationalized form
        c1 = -(eta^2 + 2 gamma^2 log(gamma lambda)) / (gamma sqrt(D) - eta)
    is used; it has no 1/(gamma^2 - 1) factor. Entries with
    sigma2 < SIGMA2_ZERO take the sigma -> 0 limit eta/2 + log(lambda)/eta,
    with eta >= 0 clamped to CLAMPED_MEAN as for Spjotvoll weights.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gamma2 = sigma2 + 1.0
        gamma = np.sqrt(gamma2)
        log_gl = 0.5 * np.log(gamma2) + log_lam
        disc = eta * eta + 2.0 * sigma2 * log_gl
        root = np.sqrt(disc)
        den = gamma * root - eta
        c_rat = -(eta * eta + 2.0 * gamma2 * log_gl) / den
        c_std = -(eta + gamma * root) / sigma2
        c = np.where((eta <= 0.0) & (den > 0.0), c_rat, c_std)
        mu = np.minimum(eta, CLAMPED_MEAN)
        c_lim = 0.5 * mu + log_lam / mu
        return np.where(sigma2 < SIGMA2_ZERO, c_lim, c)


def dc1_kernel(eta: np.ndarray, sigma2: np.ndarray, log_lam) -> np.ndarray:
    """Derivative of c1 with respect to log(lambda): -gamma / sqrt(D)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        gamma2 = sigma2 + 1.0
        disc = eta * eta + 2.0 * sigma2 * (0.5 * np.log(gamma2) + log_lam)
        d = -np.sqrt(gamma2) / np.sqrt(disc)
        d_lim = 1.0 / np.minimum(eta, CLAMPED_MEAN)
        return np.where(sigma2 < SIGMA2_ZERO, d_lim, d)


def lower_lambda_kernel(eta: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """l(eta, gamma) = exp(-eta^2 / (2 sigma2)) / gamma, 0 in the sigma -> 0 limit."""
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        val = np.exp(-eta * eta / (2.0 * sigma2)) / np.sqrt(sigma2 + 1.0)
        return np.where(sigma2 < SIGMA2_ZERO, 0.0, val)


def critical_value(eff: PriorEffect, lam: float) -> float:
    """c1(eta, gamma; lambda), the optimal critical value at dual variable lambda."""
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    if eff.sigma2 >= SIGMA2_ZERO:
        disc = eff.eta ** 2 + 2.0 * eff.sigma2 * math.log(eff.gamma * lam)
        if disc < 0.0:
            raise DomainError(
                f"negative discriminant {disc:.3e}: lambda={lam} is below "
                f"l(eta, gamma)={lower_lambda(eff):.6g}"
            )
    c = c1_kernel(np.asarray(eff.eta), np.asarray(eff.sigma2), math.log(lam))
    return float(c)


def lower_lambda(eff: PriorEffect) -> float:
    """Below this dual value the Lagrangian term peaks at c = +inf."""
    if not eff.gamma > 1.0:
        raise DomainError(f"lower_lambda needs gamma > 1, got sigma2={eff.sigma2!r}")
    return float(lower_lambda_kernel(np.asarray(eff.eta), np.asarray(eff.sigma2)))


@dataclass(frozen=True)
class ConditionCheck:
    holds: bool
    margin: float

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class SimpleCondition:
    """Outcome of the explicit sufficient condition.

    z_abs is |Phi_inv(alpha/K)|; z_asymptotic is (2 log(K/alpha))^(1/2),
    the large-K/alpha approximation of it.
    """

    holds: bool
    z_abs: float
    z_asymptotic: float
    count: int

    def __bool__(self) -> bool:
        return self.holds


def check_small_q_condition(effs: EffectsLike, q: float) -> ConditionCheck:
    """Does q <= (1/J) sum_i Phi(c1(eta_i, gamma_i; 1)) hold? margin is rhs - q."""
    pe = as_effects(effs)
    if len(pe) == 0:
        return ConditionCheck(True, 0.0)
    rhs = float(np.mean(Phi(c1_kernel(pe.eta, pe.sigma2, 0.0))))
    return ConditionCheck(q <= rhs, rhs - q)


def check_simple_condition(effs: EffectsLike, alpha: float, K: int) -> SimpleCondition:
    """At least K indices with eta_i < 0 and
    gamma_i^2 log(gamma_i^2) / |z| <= |eta_i| <= |z|, z = Phi_inv(alpha/K)."""
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K!r}")
    level = alpha / K
    if not level < 1.0:
        raise DomainError(f"alpha/K must be below 1, got {level!r}")

    z_abs = abs(Phi_inv(level))
    z_asym = math.sqrt(2.0 * math.log(K / alpha)) if K > alpha else 0.0

    pe = as_effects(effs)
    gamma2 = pe.sigma2 + 1.0
    lower = gamma2 * np.log(gamma2) / z_abs
    mag = np.abs(pe.eta)
    ok = (pe.eta < 0.0) & (lower <= mag) & (mag <= z_abs)
    count = int(np.count_nonzero(ok))
    return SimpleCondition(count >= K, z_abs, z_asym, count)


def rejection_levels(weights, q: float) -> np.ndarray:
    """Per-test rejection levels q * w_i, clipped to [0, 1].

    Levels within 1e-12 of 1 become exactly 1 so a weight at the cap 1/q
    always rejects.
    """
    level = np.clip(q * np.asarray(weights, dtype=float), 0.0, 1.0)
    return np.where(np.abs(level - 1.0) <= 1e-12, 1.0, level)


def expected_rejections(weights, eta, sigma2, q: float) -> float:
    """sum_i Phi((Phi_inv(q w_i) - eta_i) / gamma_i); sigma2 = 0 gives the fixed-mean sum."""
    crit = Phi_inv(rejection_levels(weights, q))
    with np.errstate(invalid="ignore"):
        return float(np.sum(Phi((crit - np.asarray(eta)) / np.sqrt(np.asarray(sigma2) + 1.0))))
