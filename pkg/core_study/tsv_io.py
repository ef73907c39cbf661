"""
core_study/tsv_io.py

Tab-separated study files.

Input (read_study_table / read_study / write_study), UTF-8, '#' comment lines allowed:
    id  prior_z | prior_p [prior_sign]  n_prior  n_current  p_current
Header names are case-insensitive. Empty cells mean "not given".

Output (write_outcomes / write_weights) starts with the RunMetadata
line, then a header. Floats are written in their shortest round-trip
form (at most 17 significant digits), so reading them back is exact.
"""

import csv
import warnings
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core_study.records import RunMetadata, StudyRow, StudyTable, TestOutcome, format_float
from core_weights.critical import rejection_levels
from core_weights.model import WeightSolution
from utils.exceptions import StudyFormatError
from utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

STUDY_COLUMNS = ("id", "prior_z", "prior_p", "prior_sign", "n_prior", "n_current", "p_current")
NUMERIC_COLUMNS = ("prior_z", "prior_p", "n_prior", "n_current", "p_current")
OUTCOME_COLUMNS = ["id", "weight", "threshold", "rejected"]
WEIGHT_COLUMNS = ["id", "tail", "weight", "threshold"]
CHUNKSIZE = 100_000

_SIGNS = {"": 0.0, "+": 1.0, "+1": 1.0, "1": 1.0, "-": -1.0, "-1": -1.0}
# catches fields beyond the header
_EXTRA = "__extra__"


def _undecodable_line(path: Path) -> Optional[int]:
    with open(path, "rb") as fh:
        for number, raw in enumerate(fh, start=1):
            try:
                raw.decode("utf-8")
            except UnicodeDecodeError:
                return number
    return None


def _not_utf8(path: Path) -> StudyFormatError:
    return StudyFormatError("not valid UTF-8", line=_undecodable_line(path), path=str(path))


def _locate_header(path: Path) -> Tuple[int, Optional[str], bool]:
    """(leading comment lines, header line or None, whether data lines follow)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lead = 0
            for line in fh:
                if line.startswith("#"):
                    lead += 1
                    continue
                header = line.rstrip("\r\n")
                has_body = any(other.strip() for other in fh)
                return lead, header, has_body
    except UnicodeDecodeError:
        raise _not_utf8(path) from None
    return lead, None, False


def _check_columns(header: str, path: Path, line: int) -> List[str]:
    names = [c.strip().lower() for c in header.split("\t")]
    for name in names:
        if name not in STUDY_COLUMNS:
            raise StudyFormatError(
                f"unknown column {name!r}; accepted: {', '.join(STUDY_COLUMNS)}", line=line, path=str(path)
            )
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise StudyFormatError(f"duplicate columns: {', '.join(dupes)}", line=line, path=str(path))
    for required in ("id", "p_current"):
        if required not in names:
            raise StudyFormatError(f"missing required column {required!r}", line=line, path=str(path))
    if "prior_z" not in names and "prior_p" not in names:
        raise StudyFormatError("need a prior_z or prior_p column", line=line, path=str(path))
    return names


def _ragged_error(path: Path, lead: int, width: int) -> StudyFormatError:
    """Error for the first data line whose field count differs from the header's."""
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for number, line in enumerate(fh, start=1):
            text = line.rstrip("\r\n")
            if number <= lead + 1 or not text.strip() or text.strip().startswith("#"):
                continue
            fields = text.count("\t") + 1
            if fields != width:
                return StudyFormatError(f"expected {width} fields, found {fields}", line=number, path=str(path))
    return StudyFormatError(f"malformed line: rows must have {width} tab-separated fields", path=str(path))


def _floats(cells: pd.Series, name: str, lines: np.ndarray, path: Path) -> np.ndarray:
    text = cells.str.strip().to_numpy(dtype=object)
    text[text == ""] = "nan"
    try:
        return text.astype(float)
    except ValueError:
        for k, cell in enumerate(text):
            try:
                float(cell)
            except ValueError:
                raise StudyFormatError(
                    f"column {name}: not a number: {cell!r}", line=int(lines[k]), path=str(path)
                ) from None
        raise


def read_study_table(path: PathLike, chunksize: int = CHUNKSIZE) -> StudyTable:
    """Parse and validate a study file into columns, streaming it in chunks."""
    path = Path(path)
    if not path.exists():
        raise StudyFormatError("file not found", path=str(path))
    lead, header, has_body = _locate_header(path)
    if header is None:
        raise StudyFormatError("missing header line", path=str(path))
    names = _check_columns(header, path, lead + 1)
    if not has_body:
        return StudyTable.empty()

    parts: List[StudyTable] = []
    first_line = lead + 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", pd.errors.ParserWarning)
            reader = pd.read_table(
                path, sep="\t", header=None, names=names + [_EXTRA], index_col=False,
                skiprows=lead + 1, dtype=str, keep_default_na=False, skip_blank_lines=False,
                quoting=csv.QUOTE_NONE, chunksize=chunksize, encoding="utf-8",
            )
            for chunk in reader:
                parts.append(_chunk_table(chunk, names, first_line, path, lead))
                first_line += len(chunk)
    except (pd.errors.ParserError, pd.errors.ParserWarning):
        raise _ragged_error(path, lead, len(names)) from None
    except UnicodeDecodeError:
        raise _not_utf8(path) from None

    table = StudyTable.concat(parts)
    logger.info("read %d rows from %s", len(table), path)
    return table


def read_study(path: PathLike, chunksize: int = CHUNKSIZE) -> List[StudyRow]:
    """read_study_table, one StudyRow per data line."""
    return read_study_table(path, chunksize).rows()


def _chunk_table(chunk: pd.DataFrame, names: List[str], first_line: int, path: Path, lead: int) -> StudyTable:
    raw = chunk[names]
    cells = raw.fillna("")
    ids = cells["id"].str.strip()
    lines = first_line + np.arange(len(chunk))

    # comment and blank lines keep their place so line numbers stay exact
    skip = ids.str.startswith("#").to_numpy()
    no_id = (ids == "").to_numpy()
    if no_id.any():
        sub = cells[no_id]
        skip[no_id] = np.all([sub[c].str.strip().to_numpy() == "" for c in names], axis=0)
    keep = ~skip
    ragged = keep & (raw.isna().any(axis=1).to_numpy() | chunk[_EXTRA].notna().to_numpy())
    if ragged.any():
        raise _ragged_error(path, lead, len(names))

    cells, ids, lines = cells[keep], ids[keep], lines[keep]
    empty = (ids == "").to_numpy()
    if empty.any():
        raise StudyFormatError("empty id", line=int(lines[np.argmax(empty)]), path=str(path))

    n = len(cells)
    cols = {
        name: _floats(cells[name], name, lines, path) if name in names else np.full(n, np.nan)
        for name in NUMERIC_COLUMNS
    }
    missing_p = np.isnan(cols["p_current"])
    if missing_p.any():
        raise StudyFormatError("missing p_current", line=int(lines[np.argmax(missing_p)]), path=str(path))

    sign = np.zeros(n)
    if "prior_sign" in names:
        keys = cells["prior_sign"].str.strip()
        sign = keys.map(_SIGNS).to_numpy(dtype=float)
        unknown = np.isnan(sign)
        if unknown.any():
            k = int(np.argmax(unknown))
            raise StudyFormatError(
                f"prior_sign must be +, -, +1 or -1, got {keys.iloc[k]!r}", line=int(lines[k]), path=str(path)
            )

    return StudyTable(
        ids=ids.to_numpy(dtype=object),
        p_current=cols["p_current"],
        prior_z=cols["prior_z"],
        prior_p=cols["prior_p"],
        prior_sign=sign,
        n_prior=cols["n_prior"],
        n_current=cols["n_current"],
    ).validate()


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return f"{x:+d}"
    return format_float(x)


def write_study(path: PathLike, rows: Sequence[StudyRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(STUDY_COLUMNS) + "\n")
        for r in rows:
            cells = [r.id, _cell(r.prior_z), _cell(r.prior_p), _cell(r.prior_sign),
                     _cell(r.n_prior), _cell(r.n_current), _cell(r.p_current)]
            fh.write("\t".join(cells) + "\n")
    logger.info("wrote %d rows to %s", len(rows), path)


def _write_table(path: PathLike, frame: pd.DataFrame, metadata: RunMetadata) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metadata.header_line() + "\n")
        frame.to_csv(fh, sep="\t", index=False, lineterminator="\n")
    logger.info("wrote %d rows to %s", len(frame), path)


def write_outcomes(path: PathLike, outcomes: Sequence[TestOutcome], metadata: RunMetadata) -> None:
    frame = pd.DataFrame({
        "id": [o.id for o in outcomes],
        "weight": np.array([o.weight for o in outcomes], dtype=float),
        "threshold": np.array([o.weighted_threshold for o in outcomes], dtype=float),
        "rejected": np.array([o.rejected for o in outcomes], dtype=int),
    }, columns=OUTCOME_COLUMNS)
    _write_table(path, frame, metadata)


def write_weights(
    path: PathLike,
    ids: Sequence[str],
    solution: WeightSolution,
    metadata: RunMetadata,
    tails: Optional[Sequence[str]] = None,
) -> None:
    """One line per weight; two-tailed solutions list every id twice."""
    ids = list(ids)
    J = len(ids)
    w = solution.weights
    if tails is None:
        if w.size == J:
            tails = ["one"] * J
        elif w.size == 2 * J:
            tails = ["lower"] * J + ["upper"] * J
        else:
            raise StudyFormatError(f"{w.size} weights for {J} ids")
    if w.size == 2 * J:
        ids = ids + ids
    frame = pd.DataFrame({
        "id": ids,
        "tail": list(tails),
        "weight": w,
        "threshold": rejection_levels(w, solution.q_star),
    }, columns=WEIGHT_COLUMNS)
    _write_table(path, frame, metadata)


def read_outcomes(path: PathLike) -> Tuple[RunMetadata, List[TestOutcome]]:
    path = Path(path)
    if not path.exists():
        raise StudyFormatError("file not found", path=str(path))
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    metadata = RunMetadata.parse(first)
    frame = pd.read_table(
        path, sep="\t", skiprows=1, dtype={"id": str}, float_precision="round_trip",
        keep_default_na=False, na_values=["nan", "NaN"],
    )
    if list(frame.columns) != OUTCOME_COLUMNS:
        raise StudyFormatError(f"expected columns {OUTCOME_COLUMNS}, got {list(frame.columns)}", line=2, path=str(path))
    outcomes = [
        TestOutcome(str(i), float(w), float(t), bool(x))
        for i, w, t, x in zip(frame["id"], frame["weight"], frame["threshold"], frame["rejected"])
    ]
    return metadata, outcomes
