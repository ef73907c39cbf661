"""
core_power/studies.py

Simulation studies comparing weighting schemes.

comparison_study     random priors eta ~ N(0, 1), sigma ~ |N(0, 1)|; Bayes
                     swept over the dispersion phi, exponential over the
                     tilt beta, filtering over the threshold |M|.
sparse_means_study   two-point means (small m, large M); Spjotvoll, Bayes
                     with a common sigma and unweighted, each scored under
                     the fixed-mean and the prior-averaged objective.

Both return long-format DataFrames ready for save_csv.
"""

import math
from typing import Sequence

import numpy as np
import pandas as pd

from core_power.analytic import average_power, deterministic_power
from core_weights.bayes import bayes_weights_general
from core_weights.model import PriorEffects, WeightSolution
from core_weights.schemes import compute_weights
from core_weights.spjotvoll import spjotvoll_weights
from utils.exceptions import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

COMPARISON_COLUMNS = ["scheme", "parameter", "power", "q_star", "exact"]
SPARSE_COLUMNS = ["pi1", "scheme", "objective", "power", "w_small", "w_large"]


def draw_priors(J: int, seed: int) -> PriorEffects:
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(J)
    sigma = np.abs(rng.standard_normal(J))
    return PriorEffects(eta, sigma * sigma)


def comparison_study(
    J: int,
    q: float,
    seed: int,
    phis: Sequence[float],
    betas: Sequence[float],
    thresholds: Sequence[float],
    tol: float = 1e-12,
    max_iter: int = 200,
) -> pd.DataFrame:
    """Average power of every scheme under the drawn priors.

    Each solution is scored at its own level q*. phi = 0 is Spjotvoll
    on the prior means; a separate 'spjotvoll' row repeats it.
    """
    if J < 1:
        raise DomainError(f"J must be at least 1, got {J!r}")
    truth = draw_priors(J, seed)
    records = []

    def score(scheme: str, parameter: float, sol: WeightSolution) -> None:
        power = average_power(sol.weights, truth, sol.q_star)
        records.append((scheme, parameter, power, sol.q_star, sol.exact))

    score("unweighted", math.nan, compute_weights("unweighted", truth, q))
    spjotvoll = spjotvoll_weights(truth.eta, q, tol=tol, max_iter=max_iter)
    score("spjotvoll", math.nan, spjotvoll)
    for phi in phis:
        if phi == 0.0:
            sol = spjotvoll
        else:
            sol = bayes_weights_general(truth.with_dispersion(phi), q, tol=tol, max_iter=max_iter)
        score("bayes", float(phi), sol)
    for beta in betas:
        score("exponential", float(beta), compute_weights("exponential", truth, q, beta=beta))
    for m in thresholds:
        score("filter", abs(float(m)), compute_weights("filter", truth, q, threshold_M=-abs(float(m))))

    frame = pd.DataFrame.from_records(records, columns=COMPARISON_COLUMNS)
    logger.info("comparison study: J=%d, q=%g, seed=%d, %d rows", J, q, seed, len(frame))
    return frame


def sparse_means_study(
    J: int,
    q: float,
    pi1_grid: Sequence[float],
    m: float,
    M: float,
    sigma: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> pd.DataFrame:
    """Sweep the fraction pi1 of large means.

    The first round(pi1 J) tests have mean M, the rest m. w_small and
    w_large are the weights the two classes receive (NaN for an empty
    class).
    """
    if J < 1:
        raise DomainError(f"J must be at least 1, got {J!r}")
    if not sigma >= 0.0:
        raise DomainError(f"sigma must be >= 0, got {sigma!r}")
    records = []
    for pi1 in pi1_grid:
        n_large = int(round(float(pi1) * J))
        mus = np.where(np.arange(J) < n_large, M, m)
        prior = PriorEffects(mus, np.full(J, sigma * sigma))
        solutions = {
            "spjotvoll": spjotvoll_weights(mus, q, tol=tol, max_iter=max_iter),
            "bayes": bayes_weights_general(prior, q, tol=tol, max_iter=max_iter),
            "unweighted": compute_weights("unweighted", prior, q),
        }
        for scheme, sol in solutions.items():
            w_large = float(sol.weights[0]) if n_large > 0 else math.nan
            w_small = float(sol.weights[-1]) if n_large < J else math.nan
            records.append((float(pi1), scheme, "deterministic",
                            deterministic_power(sol.weights, mus, sol.q_star), w_small, w_large))
            records.append((float(pi1), scheme, "average",
                            average_power(sol.weights, prior, sol.q_star), w_small, w_large))

    frame = pd.DataFrame.from_records(records, columns=SPARSE_COLUMNS)
    logger.info("sparse means study: J=%d, q=%g, %d grid points", J, q, len(pi1_grid))
    return frame
