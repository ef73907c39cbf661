"""
core_numerics/normal.py

Standard normal density, CDF and quantile on the extended reals.

Every function accepts a Python float or an ndarray and returns the same
shape (a float for scalar input). Infinite inputs are legal everywhere:
Phi(-inf) = 0, Phi(+inf) = 1, Phi_inv(0) = -inf, Phi_inv(1) = +inf.

Usage:
    from core_numerics.normal import phi, Phi, Phi_inv
    Phi(1.96)          # 0.9750021048517795
    Phi_inv(0.975)     # 1.959963984540054
"""

import math
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from utils.exceptions import DomainError

Real = Union[float, np.ndarray]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _out(x: np.ndarray) -> Real:
    return float(x) if x.ndim == 0 else x


def phi(x: ArrayLike) -> Real:
    """Standard normal density (2*pi)^(-1/2) * exp(-x^2/2)."""
    x = np.asarray(x, dtype=float)
    return _out(INV_SQRT_2PI * np.exp(-0.5 * x * x))


def Phi(x: ArrayLike) -> Real:
    """Standard normal CDF Pr(Z <= x).

    ndtr evaluates the lower tail through erfc, so relative accuracy holds
    deep into the left tail; the right tail is 1 - Phi(-x) to absolute
    machine precision.
    """
    x = np.asarray(x, dtype=float)
    return _out(special.ndtr(x))


def Phi_inv(p: ArrayLike) -> Real:
    """Standard normal quantile.

    Rational approximation (ndtri) refined by one Halley step against
    Phi. The step is taken on the lower tail min(p, 1 - p) and mirrored,
    so it keeps relative accuracy near 1 as well as near 0. Raises
    DomainError for p outside [0, 1] or NaN.
    """
    p = np.asarray(p, dtype=float)
    bad = ~((p >= 0.0) & (p <= 1.0))
    if np.any(bad):
        offender = p[bad].flat[0] if p.ndim else float(p)
        raise DomainError(f"Phi_inv needs 0 <= p <= 1, got {offender!r}")

    upper = p > 0.5
    tail = np.where(upper, 1.0 - p, p)
    z = special.ndtri(tail)
    dens = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (special.ndtr(z) - tail) / dens
        step = u / (1.0 + 0.5 * z * u)
    step = np.where(np.isfinite(z) & np.isfinite(step) & (dens > 0.0), step, 0.0)
    z = z - step
    return _out(np.where(upper, -z, z))
