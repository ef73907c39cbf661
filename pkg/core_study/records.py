"""
core_study/records.py

Row and result records of the testing pipeline, plus the run metadata
written as the `# q=... q_star=...` header of output files.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from utils.exceptions import StudyFormatError, StudyValidationError

TAILS = ("one", "lower", "upper")


@dataclass(slots=True)
class StudyRow:
    """One hypothesis of a study file.

    Exactly one of prior_z / prior_p is set. prior_sign (+1 / -1) only
    applies to prior_p. Missing sample sizes fall back to global values
    at mapping time.
    """

    id: str
    p_current: float
    prior_z: Optional[float] = None
    prior_p: Optional[float] = None
    prior_sign: Optional[int] = None
    n_prior: Optional[float] = None
    n_current: Optional[float] = None

    def validate(self) -> "StudyRow":
        if (self.prior_z is None) == (self.prior_p is None):
            raise StudyValidationError("exactly one of prior_z and prior_p must be given", self.id)
        if self.prior_z is not None and not math.isfinite(self.prior_z):
            raise StudyValidationError(f"prior_z must be finite, got {self.prior_z!r}", self.id)
        if self.prior_p is not None and not 0.0 < self.prior_p <= 1.0:
            raise StudyValidationError(f"prior_p must lie in (0, 1], got {self.prior_p!r}", self.id)
        if self.prior_sign is not None:
            if self.prior_sign not in (1, -1):
                raise StudyValidationError(f"prior_sign must be +1 or -1, got {self.prior_sign!r}", self.id)
            if self.prior_z is not None:
                raise StudyValidationError("prior_sign only applies to prior_p", self.id)
        for name in ("n_prior", "n_current"):
            value = getattr(self, name)
            if value is not None and not (value > 0.0 and math.isfinite(value)):
                raise StudyValidationError(f"{name} must be positive, got {value!r}", self.id)
        if not 0.0 <= self.p_current <= 1.0:
            raise StudyValidationError(f"p_current must lie in [0, 1], got {self.p_current!r}", self.id)
        return self

    @property
    def has_sign(self) -> bool:
        return self.prior_z is not None or self.prior_sign is not None


@dataclass(frozen=True)
class StudyTable:
    """Columnar study: one array per StudyRow field.

    Absent optional values are NaN; prior_sign is 0 when not given.
    """

    ids: np.ndarray
    p_current: np.ndarray
    prior_z: np.ndarray
    prior_p: np.ndarray
    prior_sign: np.ndarray
    n_prior: np.ndarray
    n_current: np.ndarray

    def __len__(self) -> int:
        return int(self.ids.size)

    @property
    def has_sign(self) -> np.ndarray:
        return ~np.isnan(self.prior_z) | (self.prior_sign != 0)

    @classmethod
    def empty(cls) -> "StudyTable":
        nothing = np.empty(0)
        return cls(np.empty(0, dtype=object), *([nothing] * 6))

    @classmethod
    def from_rows(cls, rows: Sequence[StudyRow]) -> "StudyTable":
        def column(name):
            return np.array([math.nan if getattr(r, name) is None else getattr(r, name) for r in rows], dtype=float)

        return cls(
            ids=np.array([r.id for r in rows], dtype=object),
            p_current=column("p_current"),
            prior_z=column("prior_z"),
            prior_p=column("prior_p"),
            prior_sign=np.array([r.prior_sign or 0 for r in rows], dtype=float),
            n_prior=column("n_prior"),
            n_current=column("n_current"),
        )

    @classmethod
    def concat(cls, parts: Sequence["StudyTable"]) -> "StudyTable":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__dataclass_fields__))

    def rows(self) -> List[StudyRow]:
        def opt(x):
            return None if math.isnan(x) else float(x)

        return [
            StudyRow(
                id=str(self.ids[k]),
                p_current=float(self.p_current[k]),
                prior_z=opt(self.prior_z[k]),
                prior_p=opt(self.prior_p[k]),
                prior_sign=int(self.prior_sign[k]) or None,
                n_prior=opt(self.n_prior[k]),
                n_current=opt(self.n_current[k]),
            )
            for k in range(len(self))
        ]

    def validate(self) -> "StudyTable":
        """Vectorized StudyRow.validate; the error names the first offending row."""
        has_z, has_p = ~np.isnan(self.prior_z), ~np.isnan(self.prior_p)
        with np.errstate(invalid="ignore"):
            checks = [
                (has_z == has_p, lambda k: "exactly one of prior_z and prior_p must be given"),
                (has_z & ~np.isfinite(self.prior_z), lambda k: f"prior_z must be finite, got {float(self.prior_z[k])!r}"),
                (has_p & ~((self.prior_p > 0.0) & (self.prior_p <= 1.0)),
                 lambda k: f"prior_p must lie in (0, 1], got {float(self.prior_p[k])!r}"),
                ((self.prior_sign != 0) & (np.abs(self.prior_sign) != 1),
                 lambda k: f"prior_sign must be +1 or -1, got {float(self.prior_sign[k])!r}"),
                ((self.prior_sign != 0) & has_z, lambda k: "prior_sign only applies to prior_p"),
                (~np.isnan(self.n_prior) & ~((self.n_prior > 0.0) & np.isfinite(self.n_prior)),
                 lambda k: f"n_prior must be positive, got {float(self.n_prior[k])!r}"),
                (~np.isnan(self.n_current) & ~((self.n_current > 0.0) & np.isfinite(self.n_current)),
                 lambda k: f"n_current must be positive, got {float(self.n_current[k])!r}"),
                (~((self.p_current >= 0.0) & (self.p_current <= 1.0)),
                 lambda k: f"p_current must lie in [0, 1], got {float(self.p_current[k])!r}"),
            ]
        bad = np.zeros(len(self), dtype=bool)
        for mask, _ in checks:
            bad |= mask
        if np.any(bad):
            k = int(np.argmax(bad))
            message = next(text for mask, text in checks if mask[k])
            raise StudyValidationError(message(k), str(self.ids[k]))
        return self


StudyLike = Union[StudyTable, Sequence[StudyRow]]


def as_table(rows: StudyLike) -> StudyTable:
    if isinstance(rows, StudyTable):
        return rows
    return StudyTable.from_rows(rows)


@dataclass(slots=True)
class TestOutcome:
    """Decision for one id. rejected holds iff p_value <= weighted_threshold
    for the tail reported."""

    __test__ = False

    id: str
    weight: float
    weighted_threshold: float
    rejected: bool
    p_value: float = math.nan
    tail: str = "one"


def format_float(x: float) -> str:
    return format(x, ".17g")


@dataclass(frozen=True)
class RunMetadata:
    q: float
    q_star: float
    phi: float
    lambda_: float
    scheme: str
    exact: bool
    method: str = ""

    def header_line(self) -> str:
        parts = [
            f"q={format_float(self.q)}",
            f"q_star={format_float(self.q_star)}",
            f"phi={format_float(self.phi)}",
            f"lambda={format_float(self.lambda_)}",
            f"scheme={self.scheme}",
            f"exact={'true' if self.exact else 'false'}",
        ]
        if self.method:
            parts.append(f"method={self.method}")
        return "# " + " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> "RunMetadata":
        text = line.strip()
        if not text.startswith("#"):
            raise StudyFormatError(f"metadata line must start with '#': {line!r}")
        fields = {}
        for token in text[1:].split():
            key, sep, value = token.partition("=")
            if not sep:
                raise StudyFormatError(f"metadata token without '=': {token!r}")
            fields[key] = value
        missing = [k for k in ("q", "q_star", "phi", "lambda", "scheme", "exact") if k not in fields]
        if missing:
            raise StudyFormatError(f"metadata line lacks {', '.join(missing)}")
        try:
            return cls(
                q=float(fields["q"]),
                q_star=float(fields["q_star"]),
                phi=float(fields["phi"]),
                lambda_=float(fields["lambda"]),
                scheme=fields["scheme"],
                exact=fields["exact"].lower() == "true",
                method=fields.get("method", ""),
            )
        except ValueError as exc:
            raise StudyFormatError(f"bad number in metadata: {exc}") from exc

    @classmethod
    def from_solution(cls, solution, scheme: str, phi: float) -> "RunMetadata":
        return cls(
            q=solution.q if math.isfinite(solution.q) else solution.q_star,
            q_star=solution.q_star,
            phi=phi,
            lambda_=solution.lambda_,
            scheme=scheme,
            exact=solution.exact,
            method=solution.method,
        )
