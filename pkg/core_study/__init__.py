from core_study.mapping import map_prior, resolve_tail
from core_study.procedures import weighted_bh, weighted_bonferroni
from core_study.records import RunMetadata, StudyRow, StudyTable, TestOutcome, as_table
from core_study.tsv_io import (
    read_outcomes,
    read_study,
    read_study_table,
    write_outcomes,
    write_study,
    write_weights,
)

__all__ = [
    "StudyRow",
    "StudyTable",
    "as_table",
    "TestOutcome",
    "RunMetadata",
    "map_prior",
    "resolve_tail",
    "weighted_bonferroni",
    "weighted_bh",
    "read_study",
    "read_study_table",
    "write_study",
    "write_outcomes",
    "write_weights",
    "read_outcomes",
]
