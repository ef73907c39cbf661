import math

import numpy as np
import pytest

from core_numerics.normal import Phi_inv
from core_study.mapping import map_prior, prior_statistics, resolve_tail
from core_study.procedures import weighted_bh, weighted_bonferroni
from core_study.records import RunMetadata, StudyRow, StudyTable, TestOutcome
from core_study.tsv_io import (
    read_outcomes,
    read_study,
    read_study_table,
    write_outcomes,
    write_study,
    write_weights,
)
from core_weights.model import WeightSolution
from utils.exceptions import DomainError, StudyFormatError, StudyValidationError


def row(i, p, z=-2.0, n0=100.0, n=100.0):
    return StudyRow(id=f"rs{i}", p_current=p, prior_z=z, n_prior=n0, n_current=n).validate()


def solution(weights, q_star):
    w = np.asarray(weights, dtype=float)
    return WeightSolution(w, math.nan, q_star, True, 0.0, q=q_star, method="test")


# ------------------------------
# row validation
# ------------------------------
def test_row_validation_names_the_row():
    with pytest.raises(StudyValidationError) as info:
        StudyRow(id="rs9", p_current=1.5, prior_z=-1.0).validate()
    assert info.value.row_id == "rs9"
    assert "rs9" in str(info.value)


@pytest.mark.parametrize("kwargs", [
    dict(prior_z=-1.0, prior_p=0.1),
    dict(),
    dict(prior_p=0.0),
    dict(prior_z=-1.0, prior_sign=1),
    dict(prior_p=0.1, prior_sign=2),
    dict(prior_z=-1.0, n_prior=0.0),
    dict(prior_z=math.inf),
])
def test_row_validation_errors(kwargs):
    with pytest.raises(StudyValidationError):
        StudyRow(id="x", p_current=0.5, **kwargs).validate()


# ------------------------------
# prior mapping
# ------------------------------
def test_map_prior_unit_ratio():
    pe = map_prior([row(1, 0.1, z=-3.0), row(2, 0.2, z=1.5)])
    assert list(pe.eta) == [-3.0, 1.5]
    assert list(pe.sigma2) == [1.0, 1.0]


def test_map_prior_sample_size_scaling():
    pe = map_prior([row(1, 0.1, z=-4.0, n0=10000.0, n=2500.0)])
    assert pe.eta[0] == -2.0
    assert pe.sigma2[0] == 0.25


def test_map_prior_dispersion():
    pe = map_prior([row(1, 0.1, z=-4.0, n0=10000.0, n=2500.0)], phi=3.0)
    assert pe.sigma2[0] == pytest.approx(0.75)
    with pytest.raises(DomainError):
        map_prior([row(1, 0.1)], phi=0.0)


def test_map_prior_two_tailed_mirrors():
    pe = map_prior([row(1, 0.1, z=-1.0), row(2, 0.1, z=0.5), row(3, 0.1, z=2.0)], tail="two")
    assert len(pe) == 6
    assert np.array_equal(pe.eta[3:], -pe.eta[:3])
    assert np.array_equal(pe.sigma2[3:], pe.sigma2[:3])


def test_prior_p_rows_and_default_tail():
    unsigned = StudyRow(id="a", p_current=0.3, prior_p=0.05, n_prior=1.0, n_current=1.0).validate()
    signed = StudyRow(id="b", p_current=0.3, prior_p=0.05, prior_sign=1, n_prior=1.0, n_current=1.0).validate()
    z = prior_statistics([unsigned, signed])
    assert z[0] == pytest.approx(Phi_inv(0.025), rel=1e-14)
    assert z[1] == pytest.approx(-Phi_inv(0.025), rel=1e-14)
    assert resolve_tail([unsigned, signed]) == "two"
    assert resolve_tail([signed]) == "one"
    assert len(map_prior([unsigned, signed])) == 4
    assert len(map_prior([unsigned, signed], tail="one")) == 2


def test_map_prior_global_sample_sizes():
    rows = [StudyRow(id="a", p_current=0.3, prior_z=-2.0).validate(),
            StudyRow(id="b", p_current=0.3, prior_z=-2.0, n_prior=400.0).validate()]
    with pytest.raises(StudyValidationError) as info:
        map_prior(rows)
    assert info.value.row_id == "a"
    pe = map_prior(rows, n_prior=100.0, n_current=100.0)
    assert list(pe.sigma2) == [1.0, 0.25]
    assert list(pe.eta) == [-2.0, -1.0]


def test_resolve_tail_rejects_unknown():
    with pytest.raises(DomainError):
        resolve_tail([], "both")


# ------------------------------
# weighted Bonferroni
# ------------------------------
def test_bonferroni_threshold_arithmetic():
    rows = [row(1, 0.0004), row(2, 0.0), row(3, 0.5), row(4, 1.0)]
    out = weighted_bonferroni(rows, solution([10.0, 0.0, 1.0, 1e4], 1e-4))
    assert [o.rejected for o in out] == [True, True, False, True]
    assert out[0].weighted_threshold == pytest.approx(1e-3)
    assert out[1].weighted_threshold == 0.0
    assert out[3].weighted_threshold == 1.0
    assert all(o.tail == "one" for o in out)


def test_bonferroni_unit_weights_is_plain_bonferroni():
    p = [0.001, 0.01, 0.02, 0.5]
    rows = [row(i, pi) for i, pi in enumerate(p)]
    out = weighted_bonferroni(rows, solution(np.ones(4), 0.01))
    assert [o.rejected for o in out] == [pi <= 0.01 for pi in p]


def test_bonferroni_two_tailed_reduction():
    rows = [row(1, 0.9999), row(2, 0.0005), row(3, 0.5)]
    w = [1.0, 1.0, 1.0, 2.0, 0.0, 1.0]
    out = weighted_bonferroni(rows, solution(w, 1e-3))
    assert [o.rejected for o in out] == [True, True, False]
    assert out[0].tail == "upper"
    assert out[0].p_value == pytest.approx(1e-4)
    assert out[1].tail == "lower"


def test_bonferroni_monotone_in_weights():
    rng = np.random.default_rng(6)
    rows = [row(i, float(p)) for i, p in enumerate(rng.uniform(0, 0.05, 40))]
    w = rng.uniform(0, 10, 40)
    before = [o.rejected for o in weighted_bonferroni(rows, solution(w, 1e-3))]
    for i in range(40):
        bumped = w.copy()
        bumped[i] *= 1.5
        after = [o.rejected for o in weighted_bonferroni(rows, solution(bumped, 1e-3))]
        assert all(a or not b for a, b in zip(after, before))


def test_bonferroni_count_mismatch():
    with pytest.raises(DomainError):
        weighted_bonferroni([row(1, 0.1)], solution([1.0, 1.0, 1.0], 0.01))


# ------------------------------
# weighted Benjamini-Hochberg
# ------------------------------
def test_bh_step_up():
    rows = [row(1, 0.01), row(2, 0.02), row(3, 0.9)]
    out = weighted_bh(rows, [1.0, 1.0, 1.0], 0.05)
    assert [o.rejected for o in out] == [True, True, False]


def test_bh_nothing_passes():
    rows = [row(1, 0.2), row(2, 0.3), row(3, 0.9)]
    assert not any(o.rejected for o in weighted_bh(rows, [1.0, 1.0, 1.0], 0.05))


def test_bh_zero_weight_never_rejects():
    rows = [row(1, 0.0), row(2, 0.001), row(3, 0.001)]
    out = weighted_bh(rows, [0.0, 1.5, 1.5], 0.05)
    assert [o.rejected for o in out] == [False, True, True]


def test_bh_weights_shift_rejections():
    rows = [row(1, 0.02), row(2, 0.03)]
    assert [o.rejected for o in weighted_bh(rows, [1.0, 1.0], 0.025)] == [False, False]
    assert [o.rejected for o in weighted_bh(rows, [1.9, 0.1], 0.025)] == [True, False]


def test_bh_weight_sum_checked():
    with pytest.raises(DomainError):
        weighted_bh([row(1, 0.1), row(2, 0.1)], [1.0, 2.0], 0.05)
    with pytest.raises(DomainError):
        weighted_bh([row(1, 0.1)], [1.0], 1.0)


# ------------------------------
# study files
# ------------------------------
def test_study_round_trip(tmp_path):
    rows = [
        StudyRow(id="rs1", p_current=1e-300, prior_z=-4.123456789012345, n_prior=1e4, n_current=2500.0),
        StudyRow(id="rs2", p_current=0.3, prior_p=0.05, prior_sign=-1, n_prior=1.0, n_current=3.0),
        StudyRow(id="rs3", p_current=1.0, prior_p=2.2e-16),
        StudyRow(id="rs4", p_current=0.1 + 0.2, prior_z=0.1, prior_sign=None, n_prior=7.5),
    ]
    path = tmp_path / "study.tsv"
    write_study(path, rows)
    assert read_study(path) == rows


def test_read_study_small_chunks_keep_line_numbers(tmp_path):
    path = tmp_path / "study.tsv"
    lines = ["id\tprior_z\tp_current"] + [f"s{i}\t-1\t0.5" for i in range(7)] + ["s7\t-1\tabc"]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path, chunksize=3)
    assert info.value.line == 9


def test_read_study_header_only(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("# produced by a prior study\nid\tprior_z\tp_current\n", encoding="utf-8")
    assert read_study(path) == []


def test_read_study_comments_blank_lines_and_case(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text(
        "# comment\nID\tPrior_P\tprior_sign\tP_CURRENT\n"
        "a\t1e-8\t+\t0.01\n\n# inner comment\nb\t0.5\t\t2.5E-3\n",
        encoding="utf-8",
    )
    rows = read_study(path)
    assert [r.id for r in rows] == ["a", "b"]
    assert rows[0].prior_sign == 1 and rows[1].prior_sign is None
    assert rows[1].p_current == 0.0025


def test_read_study_out_of_range_value(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_z\tp_current\nrs1\t-1\t0.5\nrs2\t-1\t1.5\n", encoding="utf-8")
    with pytest.raises(StudyValidationError) as info:
        read_study(path)
    assert info.value.row_id == "rs2"


def test_read_study_unknown_column(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tbeta\tp_current\nrs1\t1\t0.5\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert "beta" in str(info.value) and "prior_z" in str(info.value)
    assert info.value.line == 1


@pytest.mark.parametrize("header", ["id\tprior_z", "id\tp_current", "id\tprior_z\tprior_z\tp_current"])
def test_read_study_bad_headers(tmp_path, header):
    path = tmp_path / "study.tsv"
    path.write_text(header + "\n", encoding="utf-8")
    with pytest.raises(StudyFormatError):
        read_study(path)


def test_read_study_bad_sign(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_p\tprior_sign\tp_current\nrs1\t0.1\tup\t0.5\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 2


def test_read_study_missing_file(tmp_path):
    with pytest.raises(StudyFormatError):
        read_study(tmp_path / "nope.tsv")


def test_read_study_rejects_trailing_extra_field(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_z\tp_current\nrs1\t-1\t0.5\tjunk\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 2
    assert "expected 3 fields, found 4" in str(info.value)


def test_read_study_rejects_trailing_tab(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_z\tp_current\nrs1\t-1\t0.5\nrs2\t-1\t0.5\t\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 3


def test_read_study_rejects_many_extra_fields(tmp_path):
    path = tmp_path / "study.tsv"
    lines = ["id\tprior_z\tp_current"] + [f"s{i}\t-1\t0.5" for i in range(5)] + ["s5\t-1\t0.5\tx\ty\tz"]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path, chunksize=2)
    assert info.value.line == 7


def test_read_study_rejects_short_row(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_z\tp_current\nrs1\t-1\t0.5\nrs2\t0.5\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 3
    assert "found 2" in str(info.value)


def test_read_study_invalid_utf8_reports_line(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_bytes(b"id\tprior_z\tp_current\nrs1\t-1\t0.5\nrs\xff2\t-1\t0.5\n")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 3
    assert "UTF-8" in str(info.value)


def test_read_study_invalid_utf8_in_header(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_bytes(b"# \xfe\nid\tprior_z\tp_current\nrs1\t-1\t0.5\n")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 1


def test_read_study_comment_right_after_header(tmp_path):
    path = tmp_path / "study.tsv"
    path.write_text("id\tprior_z\tp_current\n# first batch\nrs1\t-1\t0.5\n\nrs2\t-2\tabc\n", encoding="utf-8")
    with pytest.raises(StudyFormatError) as info:
        read_study(path)
    assert info.value.line == 5
    path.write_text("id\tprior_z\tp_current\n# first batch\nrs1\t-1\t0.5\n", encoding="utf-8")
    assert [r.id for r in read_study(path)] == ["rs1"]


def test_read_study_table_matches_rows(tmp_path):
    rows = [
        StudyRow(id="a", p_current=0.01, prior_p=1e-8, prior_sign=1),
        StudyRow(id="b", p_current=0.5, prior_p=0.3),
        StudyRow(id="c", p_current=1.0, prior_z=-2.5, n_prior=40.0, n_current=10.0),
    ]
    path = tmp_path / "study.tsv"
    write_study(path, rows)
    table = read_study_table(path)
    assert len(table) == 3
    assert list(table.ids) == ["a", "b", "c"]
    assert list(table.prior_sign) == [1.0, 0.0, 0.0]
    assert list(table.has_sign) == [True, False, True]
    assert np.isnan(table.prior_z[:2]).all() and table.prior_z[2] == -2.5
    assert table.rows() == rows
    assert StudyTable.from_rows(rows).rows() == rows


def test_study_table_validation_names_first_bad_row():
    table = StudyTable.from_rows([
        StudyRow(id="ok", p_current=0.5, prior_z=-1.0),
        StudyRow(id="bad1", p_current=0.5, prior_p=0.0),
        StudyRow(id="bad2", p_current=2.0, prior_z=-1.0),
    ])
    with pytest.raises(StudyValidationError) as info:
        table.validate()
    assert info.value.row_id == "bad1"
    assert "prior_p must lie in (0, 1]" in str(info.value)


def test_mapping_and_procedures_accept_tables():
    rows = [row(i, p, z=z) for i, (p, z) in enumerate([(1e-6, -3.0), (0.2, -1.0), (0.04, 0.5)])]
    table = StudyTable.from_rows(rows)
    assert resolve_tail(table) == resolve_tail(rows) == "one"
    a, b = map_prior(table, phi=0.5), map_prior(rows, phi=0.5)
    assert np.array_equal(a.eta, b.eta) and np.array_equal(a.sigma2, b.sigma2)
    sol = solution([2.0, 0.5, 0.5], 0.01)
    assert weighted_bonferroni(table, sol) == weighted_bonferroni(rows, sol)
    assert weighted_bh(table, [2.0, 0.5, 0.5], 0.05) == weighted_bh(rows, [2.0, 0.5, 0.5], 0.05)


# ------------------------------
# outputs and metadata
# ------------------------------
def test_metadata_line_round_trip():
    meta = RunMetadata(q=1e-3, q_star=0.0010000000000000002, phi=1.0, lambda_=1.2345, scheme="bayes",
                       exact=False, method="general-jump")
    line = meta.header_line()
    assert line.startswith("# q=0.001 q_star=")
    assert "exact=false" in line
    assert RunMetadata.parse(line) == meta


@pytest.mark.parametrize("line", ["q=0.1 q_star=0.1", "# q=0.1", "# q=0.1 q_star", "# q=x q_star=1 phi=1 lambda=1 scheme=a exact=true"])
def test_metadata_parse_errors(line):
    with pytest.raises(StudyFormatError):
        RunMetadata.parse(line)


def test_outcomes_round_trip(tmp_path):
    outcomes = [
        TestOutcome("rs1", 10.0 / 3.0, 1e-3 / 3.0, True),
        TestOutcome("rs2", 0.0, 0.0, False),
        TestOutcome("007", 1.0000000000000002, 0.1, True),
    ]
    meta = RunMetadata(0.1, 0.1, 1.0, math.nan, "unweighted", True)
    path = tmp_path / "out.tsv"
    write_outcomes(path, outcomes, meta)
    text = path.read_text(encoding="utf-8").splitlines()
    assert text[0] == meta.header_line()
    assert text[1] == "id\tweight\tthreshold\trejected"
    meta_back, back = read_outcomes(path)
    assert meta_back.scheme == "unweighted" and math.isnan(meta_back.lambda_)
    assert [(o.id, o.weight, o.weighted_threshold, o.rejected) for o in back] == \
        [(o.id, o.weight, o.weighted_threshold, o.rejected) for o in outcomes]


def test_write_weights_two_tailed(tmp_path):
    sol = WeightSolution(np.array([1.5, 0.5, 0.0, 2.0]), 1.1, 0.01, True, 0.0, q=0.01, method="small-q")
    path = tmp_path / "w.tsv"
    write_weights(path, ["a", "b"], sol, RunMetadata.from_solution(sol, "bayes", 1.0))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1] == "id\ttail\tweight\tthreshold"
    assert [ln.split("\t")[:2] for ln in lines[2:]] == [["a", "lower"], ["b", "lower"], ["a", "upper"], ["b", "upper"]]
    assert float(lines[2].split("\t")[3]) == pytest.approx(0.015, rel=1e-15)


def test_write_weights_count_mismatch(tmp_path):
    sol = WeightSolution(np.ones(3), 1.0, 0.01, True, 0.0)
    with pytest.raises(StudyFormatError):
        write_weights(tmp_path / "w.tsv", ["a", "b"], sol, RunMetadata.from_solution(sol, "bayes", 1.0))
