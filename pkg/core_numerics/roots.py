"""
core_numerics/roots.py

Bracketed root finding for monotone scalar equations.

solve_monotone      one equation; Brent (scipy) without a derivative,
                    safeguarded Newton when a derivative is supplied.
solve_monotone_many J independent equations evaluated by one vectorized
                    function; safeguarded Newton-bisection per entry.

Neither routine evaluates f outside the bracket it was given.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from utils.exceptions import ConvergenceError, DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"invalid bracket [{self.lo}, {self.hi}]")
        if math.isnan(self.f_lo) or math.isnan(self.f_hi):
            raise DomainError("bracket end values must not be NaN")
        if self.f_lo * self.f_hi > 0.0:
            raise DomainError(
                f"f has the same sign at both ends of [{self.lo}, {self.hi}]: "
                f"f(lo)={self.f_lo}, f(hi)={self.f_hi}"
            )

    @classmethod
    def around(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        """Build a bracket by evaluating f at both ends."""
        return cls(lo, hi, float(f(lo)), float(f(hi)))


def solve_monotone(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fprime: Optional[Callable[[float], float]] = None,
    ftol: Optional[float] = None,
) -> float:
    """Root of a continuous monotone f inside `bracket`.

    Stops when |f(x)| <= ftol (default tol) or when the bracket width is
    at most tol * max(1, |x|).
    """
    ftol = tol if ftol is None else ftol
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi

    if fprime is None:
        root, info = optimize.brentq(
            f, bracket.lo, bracket.hi,
            xtol=tol, rtol=max(tol, 4.0 * _EPS), maxiter=max_iter,
            full_output=True, disp=False,
        )
        if not info.converged:
            raise ConvergenceError(
                f"brentq did not converge in {max_iter} iterations", best=root, iterations=info.iterations
            )
        return float(root)

    return _safeguarded_newton(f, fprime, bracket, tol, ftol, max_iter)


def _safeguarded_newton(f, fprime, bracket: Bracket, tol, ftol, max_iter) -> float:
    # orient so that g = sign * f is increasing
    sign = 1.0 if bracket.f_hi > 0.0 else -1.0
    lo, hi = bracket.lo, bracket.hi
    # first step: Newton from the end with the smaller residual
    if abs(bracket.f_lo) < abs(bracket.f_hi):
        best, best_res = lo, abs(bracket.f_lo)
    else:
        best, best_res = hi, abs(bracket.f_hi)
    fb = bracket.f_lo if best == lo else bracket.f_hi
    d0 = float(fprime(best))
    x = best - fb / d0 if d0 != 0.0 and math.isfinite(d0) else math.nan
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)

    for it in range(1, max_iter + 1):
        fx = float(f(x))
        res = abs(fx)
        if res < best_res:
            best, best_res = x, res
        if res <= ftol:
            return x
        if sign * fx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= tol * max(1.0, abs(x)):
            return x

        d = float(fprime(x))
        x_new = x - fx / d if d != 0.0 and math.isfinite(d) else math.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        elif abs(x_new - x) <= tol * max(1.0, abs(x)):
            return x_new
        logger.debug("newton iter %d: x=%.17g f=%.3e", it, x, fx)
        x = x_new

    raise ConvergenceError(
        f"safeguarded Newton did not converge in {max_iter} iterations (|f|={best_res:.3e})",
        best=best, iterations=max_iter,
    )


def solve_monotone_many(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    fprime: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    ftol: Optional[float] = None,
) -> np.ndarray:
    """Solve f_i(x_i) = 0 for every i, each inside its own [lo_i, hi_i].

    f(x, idx) and fprime(x, idx) receive the current iterates and the
    integer positions they belong to, so callers can slice per-entry
    parameters. Entries whose end values share a sign raise DomainError.
    """
    ftol = tol if ftol is None else ftol
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    n = lo.size
    idx_all = np.arange(n)
    if n == 0:
        return lo.copy()
    if np.any(~(lo <= hi)):
        raise DomainError("every bracket needs lo <= hi")

    f_lo = f(lo, idx_all)
    f_hi = f(hi, idx_all)
    x = np.empty(n)
    done = np.zeros(n, dtype=bool)

    hit_lo = f_lo == 0.0
    hit_hi = (f_hi == 0.0) & ~hit_lo
    x[hit_lo] = lo[hit_lo]
    x[hit_hi] = hi[hit_hi]
    done |= hit_lo | hit_hi
    if np.any(~done & (f_lo * f_hi > 0.0)):
        raise DomainError("some brackets do not straddle a root")

    sign = np.where(f_hi > 0.0, 1.0, -1.0)
    active = np.flatnonzero(~done)
    # start each entry at the end with the smaller residual
    x[active] = np.where(np.abs(f_lo[active]) <= np.abs(f_hi[active]), lo[active], hi[active])

    for it in range(max_iter):
        if active.size == 0:
            return x
        xa = x[active]
        fa = f(xa, active)
        conv = np.abs(fa) <= ftol

        up = sign[active] * fa < 0.0
        lo[active] = np.where(up, xa, lo[active])
        hi[active] = np.where(up, hi[active], xa)
        width = hi[active] - lo[active]
        conv |= width <= tol * np.maximum(1.0, np.abs(xa))

        da = fprime(xa, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - fa / da
        inside = np.isfinite(xn) & (xn > lo[active]) & (xn < hi[active])
        xn = np.where(inside, xn, 0.5 * (lo[active] + hi[active]))
        small_step = inside & (np.abs(xn - xa) <= tol * np.maximum(1.0, np.abs(xa)))

        x[active] = np.where(conv, xa, xn)
        active = active[~(conv | small_step)]

    if active.size:
        raise ConvergenceError(
            f"{active.size} of {n} equations did not converge in {max_iter} iterations",
            best=x, iterations=max_iter,
        )
    return x
