import json

import numpy as np
import pandas as pd
import pytest

from core_study.records import RunMetadata, StudyRow
from core_study.tsv_io import read_outcomes, read_study, write_study
from interface.cli import build_parser, main


@pytest.fixture
def study(tmp_path):
    rng = np.random.default_rng(12)
    rows = []
    for i in range(40):
        z = float(rng.normal(-1.0, 1.5))
        rows.append(StudyRow(id=f"rs{i}", p_current=float(rng.uniform(0, 1) ** 3), prior_z=z,
                             n_prior=1000.0, n_current=float(rng.choice([500.0, 1000.0, 4000.0]))))
    rows[0].p_current = 1e-7
    rows[0].prior_z = -3.0
    rows[0].n_current = 1000.0
    path = tmp_path / "study.tsv"
    write_study(path, rows)
    return path


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(
        "simulate:\n"
        "  n_tests: 60\n"
        "  phis: [0.0, 1.0]\n"
        "  betas: [0.0, 1.0]\n"
        "  thresholds: [0.0, -1.0]\n"
        "  pi1_grid: [0.0, 0.05]\n"
        "sparse_power:\n"
        "  m_steps: 4\n"
        "  pi1_steps: 3\n",
        encoding="utf-8",
    )
    return path


def read_table(path):
    with open(path, encoding="utf-8") as fh:
        meta = RunMetadata.parse(fh.readline())
    return meta, pd.read_table(path, skiprows=1, dtype={"id": str})


# ------------------------------
# weights
# ------------------------------
def test_weights_command(study, tmp_path):
    out = tmp_path / "w.tsv"
    assert main(["weights", "--input", str(study), "--output", str(out), "--q", "0.001"]) == 0
    meta, frame = read_table(out)
    assert meta.scheme == "bayes" and meta.q == 0.001 and meta.phi == 1.0
    assert list(frame.columns) == ["id", "tail", "weight", "threshold"]
    assert len(frame) == 40 and (frame["tail"] == "one").all()
    assert frame["weight"].sum() == pytest.approx(40.0, rel=1e-8)


def test_weights_alpha_and_two_tails(study, tmp_path):
    out = tmp_path / "w.tsv"
    assert main(["weights", "--input", str(study), "--output", str(out), "--alpha", "0.05",
                 "--tail", "two", "--scheme", "spjotvoll"]) == 0
    meta, frame = read_table(out)
    assert meta.q == pytest.approx(0.05 / 80)
    assert list(frame["tail"][:40]) == ["lower"] * 40
    assert list(frame["id"][40:]) == [f"rs{i}" for i in range(40)]


def test_weights_with_null_check(study, tmp_path, capsys):
    out = tmp_path / "w.tsv"
    args = ["weights", "--input", str(study), "--output", str(out), "--q", "0.001", "--reps", "500", "--seed", "4"]
    assert main(args) == 0
    assert "null false rejections" in capsys.readouterr().out


def test_weights_byte_identical_reruns(study, tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    base = ["weights", "--input", str(study), "--q", "0.01", "--scheme", "exponential", "--beta", "1.5"]
    assert main(base + ["--output", str(a)]) == 0
    assert main(base + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# ------------------------------
# test
# ------------------------------
def test_test_command_bonferroni(study, tmp_path):
    out = tmp_path / "o.tsv"
    assert main(["test", "--input", str(study), "--output", str(out), "--q", "0.001"]) == 0
    meta, outcomes = read_outcomes(out)
    assert len(outcomes) == 40
    assert outcomes[0].id == "rs0" and outcomes[0].rejected
    for o in outcomes:
        assert o.weighted_threshold == pytest.approx(min(1.0, meta.q_star * o.weight), rel=1e-12)


def test_test_command_unweighted_is_bonferroni(study, tmp_path):
    out = tmp_path / "o.tsv"
    assert main(["test", "--input", str(study), "--output", str(out), "--q", "0.01", "--scheme", "unweighted"]) == 0
    p = [r.p_current for r in read_study(study)]
    _, outcomes = read_outcomes(out)
    assert [o.rejected for o in outcomes] == [pi <= 0.01 for pi in p]


def test_test_command_bh(study, tmp_path):
    out = tmp_path / "o.tsv"
    assert main(["test", "--input", str(study), "--output", str(out), "--q", "0.001",
                 "--procedure", "bh", "--scheme", "filter", "--filter-M", "-1"]) == 0
    meta, outcomes = read_outcomes(out)
    assert meta.scheme == "filter"
    assert outcomes[0].rejected


# ------------------------------
# simulate and sparse-power
# ------------------------------
def test_simulate_comparison(tmp_path, small_config):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(small_config), "--output", str(out), "--seed", "5"]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["scheme", "parameter", "power", "q_star", "exact"]
    assert len(frame) == 2 + 2 + 2 + 2


def test_simulate_sparse_design(tmp_path, small_config):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(small_config), "--output", str(out),
                 "--design", "sparse", "--n-tests", "100", "--q", "0.01"]) == 0
    frame = pd.read_csv(out)
    assert set(frame["objective"]) == {"deterministic", "average"}
    assert len(frame) == 2 * 3 * 2


def test_simulate_byte_identical(tmp_path, small_config):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--config", str(small_config), "--output", str(out), "--seed", "8"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sparse_power_command(tmp_path, small_config):
    out = tmp_path / "ratio.csv"
    assert main(["sparse-power", "--config", str(small_config), "--output", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["M", "pi1", "ratio"]
    assert len(frame) == 12
    assert (frame["ratio"] >= 1.0 - 1e-12).all()


# ------------------------------
# check-condition
# ------------------------------
def test_check_condition_report(study, tmp_path):
    out = tmp_path / "cond.json"
    assert main(["check-condition", "--input", str(study), "--q", "0.0001", "--output", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["tests"] == 40
    assert report["alpha"] == pytest.approx(0.004)
    assert isinstance(report["small_q_condition"], bool)
    assert report["K"] == 10


# ------------------------------
# errors and exit codes
# ------------------------------
@pytest.mark.parametrize("extra", [
    ["--beta", "1.0"],
    ["--scheme", "exponential"],
    ["--scheme", "filter", "--filter-M", "0.5"],
    ["--phi", "0"],
])
def test_usage_errors_exit_2(study, tmp_path, extra):
    args = ["weights", "--input", str(study), "--output", str(tmp_path / "w.tsv"), "--q", "0.01"] + extra
    assert main(args) == 2


def test_level_is_required(study):
    assert main(["weights", "--input", str(study)]) == 2


def test_parser_errors_exit_2(study):
    assert main(["weights", "--input", str(study), "--q", "0.01", "--alpha", "0.05"]) == 2
    assert main(["weights", "--input", str(study), "--q", "0.01", "--bogus"]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_missing_config_exit_2(study, tmp_path):
    assert main(["weights", "--input", str(study), "--q", "0.01", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_unreadable_study_exit_1(tmp_path):
    assert main(["weights", "--input", str(tmp_path / "missing.tsv"), "--q", "0.01"]) == 1
    bad = tmp_path / "bad.tsv"
    bad.write_text("id\tprior_z\tp_current\nrs1\t-1\t7\n", encoding="utf-8")
    assert main(["test", "--input", str(bad), "--q", "0.01", "--output", str(tmp_path / "o.tsv")]) == 1




def test_malformed_study_files_exit_1(tmp_path):
    extra = tmp_path / "extra.tsv"
    extra.write_text("id\tprior_z\tp_current\nrs1\t-1\t0.5\tjunk\n", encoding="utf-8")
    assert main(["weights", "--input", str(extra), "--q", "0.01", "--output", str(tmp_path / "w.tsv")]) == 1
    binary = tmp_path / "binary.tsv"
    binary.write_bytes(b"id\tprior_z\tp_current\nrs\xff1\t-1\t0.5\n")
    assert main(["test", "--input", str(binary), "--q", "0.01", "--output", str(tmp_path / "o.tsv")]) == 1
    assert not (tmp_path / "w.tsv").exists() and not (tmp_path / "o.tsv").exists()


def test_config_reps_runs_the_null_check(study, tmp_path, capsys):
    cfg = tmp_path / "reps.yaml"
    cfg.write_text("reps: 200\nseed: 3\n", encoding="utf-8")
    out = tmp_path / "w.tsv"
    assert main(["weights", "--input", str(study), "--output", str(out), "--q", "0.001", "--config", str(cfg)]) == 0
    assert "null false rejections" in capsys.readouterr().out
    assert main(["weights", "--input", str(study), "--output", str(out), "--q", "0.001",
                 "--config", str(cfg), "--reps", "0"]) == 0
    assert "null false rejections" not in capsys.readouterr().out


def test_null_check_is_off_by_default(study, tmp_path, capsys):
    assert main(["weights", "--input", str(study), "--output", str(tmp_path / "w.tsv"), "--q", "0.001"]) == 0
    assert "null false rejections" not in capsys.readouterr().out
    assert main(["weights", "--input", str(study), "--output", str(tmp_path / "w.tsv"), "--q", "0.001",
                 "--reps", "-1"]) == 2


# ------------------------------
# per-command flags
# ------------------------------
COMMAND_FLAGS = {
    "weights": ("--input", "--q", "--alpha", "--scheme", "--beta", "--filter-M", "--phi", "--tail",
                "--seed", "--reps"),
    "test": ("--input", "--q", "--alpha", "--scheme", "--beta", "--filter-M", "--phi", "--tail",
             "--procedure"),
    "simulate": ("--q", "--alpha", "--n-tests", "--design", "--seed", "--sigma"),
    "sparse-power": ("--q",),
    "check-condition": ("--input", "--q", "--alpha", "--phi", "--tail", "--k"),
}
EVERY_FLAG = sorted({flag for flags in COMMAND_FLAGS.values() for flag in flags})


@pytest.mark.parametrize("command", sorted(COMMAND_FLAGS))
def test_help_lists_the_command_flags(command, capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args([command, "--help"])
    text = capsys.readouterr().out
    for flag in COMMAND_FLAGS[command] + ("--output", "--config", "--verbose"):
        assert flag in text
    for flag in EVERY_FLAG:
        if flag not in COMMAND_FLAGS[command]:
            assert f"{flag} " not in text and f"{flag}\n" not in text


@pytest.mark.parametrize("argv", [
    ["sparse-power", "--alpha", "0.05"],
    ["sparse-power", "--scheme", "bayes"],
    ["simulate", "--beta", "1"],
    ["simulate", "--input", "study.tsv"],
    ["check-condition", "--scheme", "bayes"],
    ["check-condition", "--reps", "10"],
    ["test", "--reps", "5"],
    ["test", "--seed", "1"],
    ["weights", "--design", "sparse"],
    ["weights", "--procedure", "bh"],
])
def test_flags_of_other_commands_exit_2(argv, tmp_path):
    assert main(argv + ["--output", str(tmp_path / "out")]) == 2
    assert not (tmp_path / "out").exists()


def test_simulate_design_specific_flags(tmp_path, small_config):
    base = ["simulate", "--config", str(small_config), "--output", str(tmp_path / "sim.csv")]
    assert main(base + ["--design", "sparse", "--seed", "3"]) == 2
    assert main(base + ["--sigma", "0.5"]) == 2
    assert not (tmp_path / "sim.csv").exists()
