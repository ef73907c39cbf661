"""
core_power/monte_carlo.py

Simulation check of the analytic power formulas.

Replicates are drawn in fixed-size blocks; block b uses the generator
default_rng([seed, b]), so a given (seed, J) reproduces bit-identical
results however the blocks are scheduled.
"""

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from core_numerics.normal import Phi
from core_power.analytic import average_power, check_weights
from core_weights.critical import rejection_levels
from core_weights.model import EffectsLike, as_effects
from utils.exceptions import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

BLOCK_REPS = 1024
_BLOCK_CELLS = 1 << 22


@dataclass(frozen=True)
class PowerReport:
    scheme_name: str
    analytic_power: float
    mc_power: Optional[float] = None
    mc_se: Optional[float] = None
    n_reps: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.analytic_power <= 1.0:
            raise DomainError(f"analytic power {self.analytic_power!r} outside [0, 1]")
        if self.mc_se is not None and self.mc_se < 0.0:
            raise DomainError(f"negative standard error {self.mc_se!r}")

    @property
    def z_score(self) -> float:
        """(mc - analytic) / se; NaN without a simulation or with se = 0."""
        if self.mc_power is None or not self.mc_se:
            return math.nan
        return (self.mc_power - self.analytic_power) / self.mc_se


def _blocks(n_reps: int, J: int, seed: int) -> Iterator[tuple]:
    size = max(1, min(BLOCK_REPS, _BLOCK_CELLS // max(J, 1)))
    for b, start in enumerate(range(0, n_reps, size)):
        yield np.random.default_rng([seed, b]), min(size, n_reps - start)


def _summarize(per_rep: np.ndarray):
    n = per_rep.size
    mean = float(per_rep.mean())
    se = float(per_rep.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def monte_carlo_power(
    weights: Sequence[float],
    effs: EffectsLike,
    q: float,
    n_reps: int,
    seed: int,
    scheme_name: str = "",
) -> PowerReport:
    """Draw mu_i ~ N(eta_i, sigma_i^2), T_i ~ N(mu_i, 1) and count P_i = Phi(T_i) <= q w_i.

    mc_power is the rejected fraction per test, averaged over replicates;
    mc_se is the standard error of that average.
    """
    if n_reps < 1:
        raise DomainError(f"n_reps must be at least 1, got {n_reps!r}")
    pe = as_effects(effs)
    J = len(pe)
    w = check_weights(weights, J, q)
    analytic = min(1.0, average_power(w, pe, q))
    if J == 0:
        return PowerReport(scheme_name, 0.0, 0.0, 0.0, n_reps)

    level = rejection_levels(w, q)
    sd = np.sqrt(pe.sigma2)
    chunks = []
    for rng, m in _blocks(n_reps, J, seed):
        mu = pe.eta + sd * rng.standard_normal((m, J))
        t = mu + rng.standard_normal((m, J))
        chunks.append(np.count_nonzero(Phi(t) <= level, axis=1) / J)
    mc, se = _summarize(np.concatenate(chunks))
    logger.debug("monte carlo %s: analytic=%.6g mc=%.6g se=%.3g", scheme_name or "power", analytic, mc, se)
    return PowerReport(scheme_name, analytic, mc, se, n_reps)


def monte_carlo_null_errors(
    weights: Sequence[float], q: float, n_reps: int, seed: int, scheme_name: str = ""
) -> PowerReport:
    """False rejections per test when every null is true (P_i ~ U(0, 1)).

    analytic_power holds the exact rate mean_i(q w_i).
    """
    if n_reps < 1:
        raise DomainError(f"n_reps must be at least 1, got {n_reps!r}")
    w = np.asarray(weights, dtype=float).reshape(-1)
    J = w.size
    w = check_weights(w, J, q)
    if J == 0:
        return PowerReport(scheme_name, 0.0, 0.0, 0.0, n_reps)

    level = rejection_levels(w, q)
    chunks = []
    for rng, m in _blocks(n_reps, J, seed):
        chunks.append(np.count_nonzero(rng.random((m, J)) <= level, axis=1) / J)
    mc, se = _summarize(np.concatenate(chunks))
    return PowerReport(scheme_name, float(level.mean()), mc, se, n_reps)
