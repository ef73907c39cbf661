"""
core_weights/model.py

Value types shared by the weight solvers, the baselines and the pipeline.

PriorEffect     one test's prior N(eta, sigma2) on its mean
PriorEffects    columnar container of J priors; behaves as a sequence
WeightSolution  weights + dual variable + achieved level q*
SparseMixture   two-point mean mixture (pi1, M, q)
SparseSolution  optimal two-class weights and power
FilterSpec      threshold M and level q of the filtering baseline
"""

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from utils.exceptions import DomainError

# Variances below this use the sigma -> 0 limit formulas.
SIGMA2_ZERO = 1e-10
# Known means must be negative; nonnegative ones in the sigma -> 0 limit become this.
CLAMPED_MEAN = -1e-8


@dataclass(frozen=True)
class PriorEffect:
    eta: float
    sigma2: float

    def __post_init__(self):
        if not math.isfinite(self.eta):
            raise DomainError(f"eta must be finite, got {self.eta!r}")
        if not (self.sigma2 >= 0.0) or math.isinf(self.sigma2):
            raise DomainError(f"sigma2 must be a finite value >= 0, got {self.sigma2!r}")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.sigma2 + 1.0)


@dataclass(frozen=True)
class PriorEffects:
    """J priors stored as two float arrays.

    Indexing with an int returns a PriorEffect, with a slice or index
    array another PriorEffects.
    """

    eta: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        eta = np.ascontiguousarray(self.eta, dtype=float).reshape(-1)
        sigma2 = np.ascontiguousarray(self.sigma2, dtype=float).reshape(-1)
        if eta.shape != sigma2.shape:
            raise DomainError(f"eta has {eta.size} entries but sigma2 has {sigma2.size}")
        if not np.all(np.isfinite(eta)):
            raise DomainError("eta must be finite")
        if not np.all((sigma2 >= 0.0) & np.isfinite(sigma2)):
            raise DomainError("sigma2 must be finite and >= 0")
        eta.setflags(write=False)
        sigma2.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma2", sigma2)

    @classmethod
    def from_effects(cls, effs: Sequence[PriorEffect]) -> "PriorEffects":
        eta = np.fromiter((e.eta for e in effs), dtype=float, count=len(effs))
        sigma2 = np.fromiter((e.sigma2 for e in effs), dtype=float, count=len(effs))
        return cls(eta, sigma2)

    @classmethod
    def empty(cls) -> "PriorEffects":
        return cls(np.empty(0), np.empty(0))

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(self.sigma2 + 1.0)

    def with_dispersion(self, phi: float) -> "PriorEffects":
        """Same means, every variance multiplied by phi."""
        if not phi >= 0.0:
            raise DomainError(f"dispersion must be >= 0, got {phi!r}")
        return PriorEffects(self.eta, self.sigma2 * phi)

    def __len__(self) -> int:
        return self.eta.size

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return PriorEffect(float(self.eta[key]), float(self.sigma2[key]))
        return PriorEffects(self.eta[key], self.sigma2[key])

    def __iter__(self) -> Iterator[PriorEffect]:
        for eta, s2 in zip(self.eta.tolist(), self.sigma2.tolist()):
            yield PriorEffect(eta, s2)


EffectsLike = Union[PriorEffects, Sequence[PriorEffect]]


def as_effects(effs: EffectsLike) -> PriorEffects:
    if isinstance(effs, PriorEffects):
        return effs
    if isinstance(effs, PriorEffect):
        return PriorEffects.from_effects([effs])
    return PriorEffects.from_effects(list(effs))


@dataclass(frozen=True)
class WeightSolution:
    """Weights summing to J with their dual variable and achieved level.

    `objective` is the attained total of the objective being maximized
    (sum over tests, not the per-test average). Weights are read-only.
    """

    weights: np.ndarray
    lambda_: float
    q_star: float
    exact: bool
    objective: float
    q: float = math.nan
    method: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class SparseMixture:
    pi1: float
    M: float
    q: float

    def __post_init__(self):
        if not 0.0 < self.pi1 < 1.0:
            raise DomainError(f"pi1 must lie in (0, 1), got {self.pi1!r}")
        if not self.M < 0.0:
            raise DomainError(f"M must be negative, got {self.M!r}")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q!r}")

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1


@dataclass(frozen=True)
class SparseSolution:
    w0: float
    w1: float
    power: float


@dataclass(frozen=True)
class FilterSpec:
    threshold_M: float
    q: float

    def __post_init__(self):
        if not self.threshold_M <= 0.0:
            raise DomainError(f"filter threshold must be <= 0, got {self.threshold_M!r}")
        if not 0.0 < self.q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {self.q!r}")
