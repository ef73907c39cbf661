"""
core_weights/bayes.py

Bayes weights: maximize sum_i Phi((Phi_inv(q w_i) - eta_i) / gamma_i)
subject to sum_i w_i = J, 0 <= w_i <= 1/q.

Both solvers search the scalar dual variable lambda of the sum
constraint. They work in t = log(lambda), where the critical values
c1(eta, gamma; lambda) are smooth.

bayes_weights_small_q   exact when the small-q condition holds; the
                        dual lies in [1, inf) and every weight is interior.
bayes_weights_general   any q in (0, 1). Each index has a breakpoint
                        k_i below which its weight sits at the cap 1/q.
                        Either an exact dual exists between two
                        consecutive breakpoints, or the constraint falls
                        in the jump at one breakpoint; then a subset of
                        the tied indices is capped and the weights are
                        rescaled to an exact solution at q* = W* q / J.
"""

import math

import numpy as np

from core_numerics.normal import Phi, Phi_inv, phi
from core_numerics.roots import Bracket, solve_monotone, solve_monotone_many
from core_weights.critical import (
    c1_kernel,
    check_small_q_condition,
    dc1_kernel,
    lower_lambda_kernel,
)
from core_weights.model import CLAMPED_MEAN, SIGMA2_ZERO, EffectsLike, PriorEffect, PriorEffects, WeightSolution, as_effects
from utils.exceptions import ConvergenceError, DomainError, PreconditionError
from utils.logger import get_logger

logger = get_logger(__name__)

SUM_TOL = 1e-8
_LAMBDA_FLOOR = 1e-300
_LOWER_NUDGE = 1e-9
_MAX_EXPANSIONS = 1100


def _check_q(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")


def _empty(q: float) -> WeightSolution:
    return WeightSolution(np.empty(0), math.nan, q, True, 0.0, q=q, method="empty")


def _objective(crit: np.ndarray, pe: PriorEffects) -> float:
    with np.errstate(invalid="ignore"):
        return float(np.sum(Phi((crit - pe.eta) / pe.gamma)))


def _warn_clamped(pe: PriorEffects) -> None:
    clamped = (pe.sigma2 < SIGMA2_ZERO) & (pe.eta >= 0.0)
    if np.any(clamped):
        logger.warning(
            "%d of %d known means are >= 0; clamped to %g",
            int(clamped.sum()), len(pe), CLAMPED_MEAN,
        )


# ----------------- small q -----------------
def bayes_weights_small_q(
    effs: EffectsLike, q: float, tol: float = 1e-12, max_iter: int = 200
) -> WeightSolution:
    """Exact Bayes weights w_i = Phi(c1(eta_i, gamma_i; lambda)) / q with lambda >= 1.

    Raises PreconditionError when q is too large for this regime; use
    bayes_weights_general then.
    """
    _check_q(q)
    pe = as_effects(effs)
    J = len(pe)
    if J == 0:
        return _empty(q)

    check = check_small_q_condition(pe, q)
    if not check.holds:
        raise PreconditionError(
            f"small-q condition fails (slack {check.margin:.3e}); use bayes_weights_general"
        )
    _warn_clamped(pe)

    t = _small_q_dual(pe, q, tol, max_iter)
    crit = c1_kernel(pe.eta, pe.sigma2, t)
    w = Phi(crit) / q
    _check_sum(w, J)
    logger.info("small-q solver: lambda=%.10g, sum w - J = %.3e", math.exp(t), w.sum() - J)
    return WeightSolution(w, math.exp(t), q, True, _objective(crit, pe), q=q, method="small-q")


def _small_q_dual(pe: PriorEffects, q: float, tol: float, max_iter: int) -> float:
    J = len(pe)
    eta, s2 = pe.eta, pe.sigma2

    if np.all(eta == eta[0]) and np.all(s2 == s2[0]) and s2[0] >= SIGMA2_ZERO:
        # identical priors: every weight is 1, so c1 = Phi_inv(q)
        z = Phi_inv(q)
        g2 = s2[0] + 1.0
        return max(0.0, 0.5 * z * z - (z - eta[0]) ** 2 / (2.0 * g2) - 0.5 * math.log(g2))
    if np.all(s2 < SIGMA2_ZERO):
        mu = np.minimum(eta, CLAMPED_MEAN)
        if np.all(mu == mu[0]):
            # known equal means: Spjotvoll constant mu Phi_inv(q) - mu^2/2
            return float(mu[0] * Phi_inv(q) - 0.5 * mu[0] ** 2)

    def excess(t: float) -> float:
        return float(np.sum(Phi(c1_kernel(eta, s2, t)))) / q - J

    def slope(t: float) -> float:
        c = c1_kernel(eta, s2, t)
        return float(np.sum(phi(c) * dc1_kernel(eta, s2, t))) / q

    f_lo = excess(0.0)
    t_hi = math.log(2.0)
    for _ in range(_MAX_EXPANSIONS):
        f_hi = excess(t_hi)
        if f_hi < 0.0:
            break
        t_hi += math.log(2.0)
    else:
        raise ConvergenceError("could not bracket the dual variable", best=math.exp(t_hi))

    return solve_monotone(
        excess, Bracket(0.0, t_hi, f_lo, f_hi), tol=tol, max_iter=max_iter,
        fprime=slope, ftol=1e-10 * J,
    )


def _check_sum(w: np.ndarray, J: int) -> None:
    gap = abs(float(w.sum()) - J)
    if gap > SUM_TOL * J:
        raise ConvergenceError(f"weights sum to J{gap:+.3e}, outside tolerance", best=w)


# ----------------- breakpoints -----------------
def _gap_kernel(lam, eta, s2):
    """d(lambda): interior peak of the Lagrangian term minus its value at c = +inf.

    lambda Phi(-c1) - Phi(-(c1 - eta)/gamma) loses everything to cancellation
    when c1 is far below 0, so there the lower-tail form
    (lambda - 1) + Phi((c1 - eta)/gamma) - lambda Phi(c1) is used.
    """
    with np.errstate(divide="ignore"):
        c = c1_kernel(eta, s2, np.log(lam))
    z = (c - eta) / np.sqrt(s2 + 1.0)
    upper = lam * Phi(-c) - Phi(-z)
    lower = (lam - 1.0) + Phi(z) - lam * Phi(c)
    return np.where(c > 0.0, upper, lower)


def _gap_slope(lam, eta, s2):
    with np.errstate(divide="ignore"):
        return Phi(-c1_kernel(eta, s2, np.log(lam)))


def _breakpoint_bounds(eta, s2):
    lo = lower_lambda_kernel(eta, s2) * (1.0 + _LOWER_NUDGE)
    return np.clip(lo, _LAMBDA_FLOOR, 1.0)


def breakpoint_k(eff: PriorEffect, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Dual value where the interior maximum of the Lagrangian term ties with
    its value at c = +inf. Lies in [l(eta, gamma), 1]."""
    if eff.sigma2 < SIGMA2_ZERO:
        return 0.0
    eta, s2 = np.asarray(eff.eta), np.asarray(eff.sigma2)

    def gap(lam: float) -> float:
        return float(_gap_kernel(lam, eta, s2))

    def slope(lam: float) -> float:
        return float(_gap_slope(lam, eta, s2))

    lo = float(_breakpoint_bounds(eta, s2))
    if lo >= 1.0:
        return 1.0
    f_lo, f_hi = gap(lo), gap(1.0)
    if f_lo >= 0.0:
        return lo
    if f_hi <= 0.0:
        return 1.0
    return solve_monotone(gap, Bracket(lo, 1.0, f_lo, f_hi), tol=tol, max_iter=max_iter, fprime=slope, ftol=0.0)


def breakpoints(effs: EffectsLike, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """breakpoint_k for every index, vectorized.

    Identical (eta, sigma2) pairs are solved once, so they share a
    bit-identical breakpoint.
    """
    pe = as_effects(effs)
    if len(pe) == 0:
        return np.empty(0)
    pairs = np.column_stack([pe.eta, pe.sigma2])
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    eta, s2 = uniq[:, 0], uniq[:, 1]

    # sigma -> 0: the clamped mean is negative, so the weight is never capped from below
    k = np.zeros(eta.size)
    smooth = np.flatnonzero(s2 >= SIGMA2_ZERO)
    if smooth.size:
        e, v = eta[smooth], s2[smooth]
        lo = _breakpoint_bounds(e, v)
        f_lo = _gap_kernel(lo, e, v)
        f_hi = _gap_kernel(np.ones_like(lo), e, v)
        ks = np.where(f_lo >= 0.0, lo, 1.0)
        open_ = np.flatnonzero((f_lo < 0.0) & (f_hi > 0.0) & (lo < 1.0))
        if open_.size:
            e_o, v_o = e[open_], v[open_]
            ks[open_] = solve_monotone_many(
                lambda x, idx: _gap_kernel(x, e_o[idx], v_o[idx]),
                lo[open_], np.ones(open_.size),
                fprime=lambda x, idx: _gap_slope(x, e_o[idx], v_o[idx]),
                tol=tol, max_iter=max_iter, ftol=0.0,
            )
        k[smooth] = ks
    logger.debug("breakpoints: %d unique priors, %d distinct values", eta.size, np.unique(k).size)
    return k[inverse]


# ----------------- general case -----------------
class _DualSums:
    """W-(t) and W+(t): weight sums at t = log(lambda) with the tied
    indices (log k_i == t) taking the interior value or the cap."""

    def __init__(self, pe: PriorEffects, q: float, log_k: np.ndarray):
        self.eta, self.s2, self.q, self.log_k = pe.eta, pe.sigma2, q, log_k
        self.J = len(pe)

    def weights(self, t: float, capped_ties: bool = False) -> np.ndarray:
        interior = self.log_k < t if capped_ties else self.log_k <= t
        w = np.full(self.J, 1.0 / self.q)
        if np.any(interior):
            w[interior] = Phi(c1_kernel(self.eta[interior], self.s2[interior], t)) / self.q
        return w

    def minus(self, t: float) -> float:
        return float(self.weights(t).sum())

    def plus(self, t: float) -> float:
        return float(self.weights(t, capped_ties=True).sum())

    def slope(self, t: float) -> float:
        interior = self.log_k <= t
        e, v = self.eta[interior], self.s2[interior]
        return float(np.sum(phi(c1_kernel(e, v, t)) * dc1_kernel(e, v, t))) / self.q


def bayes_weights_general(
    effs: EffectsLike, q: float, tol: float = 1e-12, max_iter: int = 200
) -> WeightSolution:
    """Bayes weights for any q, exact at a level q* with |q* - q| <= 1/(2J)."""
    _check_q(q)
    pe = as_effects(effs)
    J = len(pe)
    if J == 0:
        return _empty(q)

    if check_small_q_condition(pe, q).holds:
        return bayes_weights_small_q(pe, q, tol=tol, max_iter=max_iter)

    _warn_clamped(pe)
    k = breakpoints(pe, tol=tol, max_iter=max_iter)
    with np.errstate(divide="ignore"):
        log_k = np.log(k)
    sums = _DualSums(pe, q, log_k)
    points = np.unique(log_k[np.isfinite(log_k)])
    logger.info("general solver: %d breakpoints, %d distinct", J, points.size)

    # largest j with W+(points[j]) >= J; j = -1 means the dual lies below every breakpoint
    lo_i, hi_i = -1, points.size
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if sums.plus(points[mid]) >= J:
            lo_i = mid
        else:
            hi_i = mid
    j = lo_i

    a = points[j] if j >= 0 else -math.inf
    b = points[j + 1] if j + 1 < points.size else math.inf
    w_at_a = sums.minus(a) if j >= 0 else J / q

    if w_at_a >= J:
        t = a if w_at_a == J else _general_dual(sums, a, b, tol, max_iter)
        w = sums.weights(t)
        _check_sum(w, J)
        crit = _critical_values(pe, log_k, t, w, q)
        logger.info("general solver: exact dual, lambda=%.10g", math.exp(t))
        return WeightSolution(w, math.exp(t), q, True, _objective(crit, pe), q=q, method="general-exact")

    return _jump_solution(pe, sums, log_k, a, q)


def _general_dual(sums: _DualSums, a: float, b: float, tol: float, max_iter: int) -> float:
    J = sums.J
    step = 1.0
    if math.isfinite(a):
        t_lo, f_lo = a, sums.minus(a) - J
    else:
        t_lo = (b if math.isfinite(b) else 0.0) - step
        for _ in range(_MAX_EXPANSIONS):
            f_lo = sums.minus(t_lo) - J
            if f_lo >= 0.0:
                break
            step *= 2.0
            t_lo -= step
        else:
            raise ConvergenceError("could not bracket the dual variable from below", best=math.exp(t_lo))

    step = 1.0
    if math.isfinite(b):
        t_hi, f_hi = b, sums.plus(b) - J
    else:
        t_hi = max(t_lo, 0.0) + step
        for _ in range(_MAX_EXPANSIONS):
            f_hi = sums.minus(t_hi) - J
            if f_hi < 0.0:
                break
            step *= 2.0
            t_hi += step
        else:
            raise ConvergenceError("could not bracket the dual variable from above", best=math.exp(t_hi))

    return solve_monotone(
        lambda t: sums.minus(t) - J, Bracket(t_lo, t_hi, f_lo, f_hi),
        tol=tol, max_iter=max_iter, fprime=sums.slope, ftol=1e-10 * J,
    )


def _critical_values(pe: PriorEffects, log_k: np.ndarray, t: float, w: np.ndarray, q: float) -> np.ndarray:
    crit = np.full(len(pe), np.inf)
    interior = (log_k <= t) & (w < 1.0 / q)
    crit[interior] = c1_kernel(pe.eta[interior], pe.sigma2[interior], t)
    return crit


def _jump_solution(pe: PriorEffects, sums: _DualSums, log_k: np.ndarray, t: float, q: float) -> WeightSolution:
    J = sums.J
    w = sums.weights(t)
    tied = np.flatnonzero(log_k == t)
    jumps = 1.0 / q - w[tied]
    base = float(w.sum())
    reach = base + np.cumsum(jumps)

    n_up = int(np.searchsorted(reach, J, side="right"))
    r_minus = float(reach[n_up - 1]) if n_up else base
    if n_up < tied.size:
        r_plus = float(reach[n_up])
        take_plus = (r_plus - J) < (J - r_minus)
        if r_minus <= 0.0:
            take_plus = True
        if r_plus * q / J > 1.0:
            take_plus = False
        if take_plus:
            n_up += 1

    w[tied[:n_up]] = 1.0 / q
    w_star = float(w.sum())
    crit = _critical_values(pe, log_k, t, w, q)
    objective = _objective(crit, pe)

    if abs(w_star - J) <= 1e-10 * J:
        logger.info("general solver: jump at lambda=%.10g closes exactly", math.exp(t))
        return WeightSolution(w, math.exp(t), q, True, objective, q=q, method="general-jump")

    q_star = w_star * q / J
    logger.info(
        "general solver: constraint inside jump at lambda=%.10g; %d of %d tied indices capped, "
        "W*=%.10g, q*=%.10g",
        math.exp(t), n_up, tied.size, w_star, q_star,
    )
    return WeightSolution(J * w / w_star, math.exp(t), q_star, False, objective, q=q, method="general-jump")
