"""
core_study/mapping.py

Turn prior summary statistics into Gaussian priors on the current
study's test-statistic means:

    eta_i    = (N_i / N0_i)^(1/2) T0_i
    sigma2_i = phi N_i / N0_i

A row given as a p-value uses T0_i = sign_i |Phi_inv(P0_i / 2)|, with a
negative sign when the row carries none.

Two-tailed layout: the J effects followed by their J mirrors (-eta_i).
"""

from typing import Optional

import numpy as np

from core_numerics.normal import Phi_inv
from core_study.records import StudyLike, StudyTable, as_table
from core_weights.model import PriorEffects
from utils.exceptions import DomainError, StudyValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

TAIL_CHOICES = ("one", "two", "auto")


def resolve_tail(rows: StudyLike, tail: str = "auto") -> str:
    """'auto' becomes 'two' as soon as one row has an unsigned prior p-value."""
    if tail not in TAIL_CHOICES:
        raise DomainError(f"tail must be one of {', '.join(TAIL_CHOICES)}, got {tail!r}")
    if tail != "auto":
        return tail
    return "one" if bool(np.all(as_table(rows).has_sign)) else "two"


def _sizes(table: StudyTable, field: str, default: Optional[float]) -> np.ndarray:
    values = np.array(getattr(table, field), dtype=float)
    missing = np.isnan(values)
    if np.any(missing):
        if default is None:
            first = table.ids[int(np.argmax(missing))]
            raise StudyValidationError(f"{field} missing and no global value configured", str(first))
        if not default > 0.0:
            raise DomainError(f"global {field} must be positive, got {default!r}")
        values[missing] = default
    return values


def prior_statistics(rows: StudyLike) -> np.ndarray:
    """T0_i for every row."""
    table = as_table(rows)
    z = np.array(table.prior_z, dtype=float)
    from_p = np.isnan(z)
    if np.any(from_p):
        sign = np.where(table.prior_sign[from_p] == 0, -1.0, table.prior_sign[from_p])
        z[from_p] = sign * np.abs(Phi_inv(0.5 * table.prior_p[from_p]))
    return z


def map_prior(
    rows: StudyLike,
    phi: float = 1.0,
    tail: str = "auto",
    n_prior: Optional[float] = None,
    n_current: Optional[float] = None,
) -> PriorEffects:
    """Priors (eta_i, sigma2_i) for the rows; 2J of them when two-tailed.

    n_prior / n_current are global sample sizes used where a row has none.
    """
    if not phi > 0.0:
        raise DomainError(f"phi must be positive, got {phi!r}")
    table = as_table(rows)
    layout = resolve_tail(table, tail)
    if len(table) == 0:
        return PriorEffects.empty()

    ratio = _sizes(table, "n_current", n_current) / _sizes(table, "n_prior", n_prior)
    eta = np.sqrt(ratio) * prior_statistics(table)
    sigma2 = phi * ratio
    if layout == "two":
        eta = np.concatenate([eta, -eta])
        sigma2 = np.concatenate([sigma2, sigma2])
    logger.info("mapped %d rows to %d priors (%s-tailed, phi=%g)", len(table), eta.size, layout, phi)
    return PriorEffects(eta, sigma2)
