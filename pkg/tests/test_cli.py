"""Command-line front end: exit codes, CSV contract, option precedence.

Runs the entry point in process through `run(argv)`; stdout is the CSV or
summary payload, stderr carries warnings and file-write notices.
"""

import math

import pytest

from occulab.cli import run
from occulab.experiments import exp_ratio_qsd

EVAL_ARGS = [
    "eval", "--what", "exit-prob-zero", "--y", "0", "--T", "2",
    "--no-timestamp",
]


def _rows(text):
    """Data rows of a CSV payload as lists of strings."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [ln.split(",") for ln in lines[1:]]


def test_eval_reference_value_and_metadata(capsys):
    assert run(EVAL_ARGS) == 0
    out = capsys.readouterr().out
    assert out.startswith("# command=eval\n# seed=none\n")
    assert "# what=exit-prob-zero\n" in out
    header = [ln for ln in out.splitlines() if not ln.startswith("#")][0]
    assert header == "y,T,value,abs_tol"
    (row,) = _rows(out)
    assert row[:2] == ["0", "2"]
    assert row[2] == "0.10797704444410904"


def test_csv_is_byte_stable_without_timestamp(capsys):
    run(EVAL_ARGS)
    first = capsys.readouterr().out
    run(EVAL_ARGS)
    second = capsys.readouterr().out
    assert first == second
    assert "# timestamp=" not in first


def test_timestamp_present_by_default(capsys):
    run(EVAL_ARGS[:-1])
    out = capsys.readouterr().out
    assert "# timestamp=" in out


def test_eval_grid_product(capsys):
    run(["eval", "--what", "exit-prob-zero", "--y", "0,0.5", "--T", "1,2",
         "--no-timestamp"])
    rows = _rows(capsys.readouterr().out)
    assert [(r[0], r[1]) for r in rows] == [
        ("0", "1"), ("0", "2"), ("0.5", "1"), ("0.5", "2"),
    ]


def test_config_file_fills_missing_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("T=3\nzzz=1\n")
    # flag beats file
    assert run(EVAL_ARGS + ["--config", str(cfg)]) == 0
    out, err = capsys.readouterr()
    (row,) = _rows(out)
    assert row[1] == "2"
    assert "zzz" in err
    # file fills what the line left unset
    assert run(["eval", "--what", "exit-prob-zero", "--y", "0",
                "--config", str(cfg), "--no-timestamp"]) == 0
    out, _ = capsys.readouterr()
    (row,) = _rows(out)
    assert row[1] == "3"


def test_bad_config_entry_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("T=banana\n")
    assert run(["eval", "--what", "exit-prob-zero", "--y", "0",
                "--config", str(cfg)]) == 2
    assert "error:" in capsys.readouterr().err


def test_summary_format(capsys):
    run(["eval", "--what", "qsd-density", "--y", "0", "--format", "summary"])
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "eval"
    assert "# command=" not in out
    assert any("0.7853981634" in ln for ln in lines)


def test_out_writes_file(tmp_path, capsys):
    target = tmp_path / "vals.csv"
    assert run(EVAL_ARGS + ["--out", str(target)]) == 0
    out, err = capsys.readouterr()
    assert out == ""
    assert str(target) in err
    assert target.read_text().startswith("# command=eval\n")


def test_laplace_check_agrees_with_quadrature(capsys):
    run(["laplace", "--what", "check", "--lam", "0.3", "--y", "0",
         "--s", "0.5", "--no-timestamp"])
    (row,) = _rows(capsys.readouterr().out)
    assert float(row[-1]) < 1e-8  # rel_diff column


def test_invert_reference_value(capsys):
    assert run(["invert", "--what", "prob", "--y", "0", "--s", "0.5",
                "--T", "2", "--no-timestamp"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert row[0] == "prob"
    assert float(row[4]) == pytest.approx(0.43443895248066028, rel=1e-9)


def test_invert_impossible_tolerance_is_an_accuracy_error(capsys):
    assert run(["invert", "--what", "prob", "--y", "0", "--s", "0.5",
                "--T", "2", "--agree-tol", "1e-30"]) == 3
    assert "error:" in capsys.readouterr().err


def test_simulate_event_rows(capsys):
    assert run(["simulate", "--y", "0", "--T", "0.5", "--dt", "0.01",
                "--event", "eq_zero", "--n", "2000", "--seed", "4",
                "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    assert "# seed=4\n" in out
    header = [ln for ln in out.splitlines() if not ln.startswith("#")][0]
    assert header == "event,t,n,n_accept,p_hat,std_err"
    (row,) = _rows(out)
    assert row[0] == "eq_zero"
    assert float(row[4]) == float(row[3]) / 2000.0


def test_simulate_tau_threshold_rows(capsys):
    run(["simulate", "--y", "0", "--T", "0.5", "--dt", "0.01", "--s", "0.25",
         "--event", "leq_s", "--n", "2000", "--seed", "4",
         "--tau-thresholds", "0.1", "--no-timestamp"])
    rows = _rows(capsys.readouterr().out)
    assert rows[0][0] == "leq_s"
    assert rows[1][0] == "leq_s&tau>=0.1"
    assert int(rows[1][3]) <= int(rows[0][3])


def test_simulate_conditioned_success(capsys):
    assert run(["simulate", "--mode", "conditioned", "--y", "0", "--T", "1",
                "--dt", "0.02", "--s", "0.25", "--event", "in_0s",
                "--n-wanted", "10", "--max-paths", "2000", "--seed", "2",
                "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    assert "# partial=False\n" in out
    assert "# n_matched=" in out and "# acceptance_rate=" in out
    rows = _rows(out)
    assert len(rows) == 10
    assert all(0.0 < float(r[1]) <= 0.25 for r in rows)


def test_simulate_conditioned_partial_exits_4(capsys):
    assert run(["simulate", "--mode", "conditioned", "--y", "0", "--T", "2",
                "--dt", "0.01", "--event", "eq_zero", "--n-wanted", "30",
                "--max-paths", "64", "--seed", "7", "--no-timestamp"]) == 4
    out, err = capsys.readouterr()
    assert "# partial=True\n" in out
    assert "warning:" in err
    assert len(_rows(out)) < 30


def test_off_grid_horizon_is_a_usage_error(capsys):
    assert run(["simulate", "--y", "0", "--T", "1", "--dt", "0.3",
                "--n", "100"]) == 2
    assert "error:" in capsys.readouterr().err


def test_experiment_csv_matches_direct_call(capsys):
    assert run(["experiment", "ratio-qsd", "--y", "0", "--T", "1,1.5",
                "--s", "0.5", "--n", "3000", "--seed", "5", "--dt", "0.02",
                "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    direct = exp_ratio_qsd(
        y_list=(0.0,), s=0.5, T_list=(1.0, 1.5), n=3000, seed=5, dt=0.02
    ).to_csv(timestamp=False)
    assert out == direct


def test_selftest_summary_passes_fast_criteria(capsys):
    assert run(["selftest", "--criteria", "3,6"]) == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln]
    assert len(lines) == 2
    assert all(ln.startswith("PASS") for ln in lines)


def test_selftest_csv_format(capsys):
    assert run(["selftest", "--criteria", "3,6", "--format", "csv",
                "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    header = [ln for ln in out.splitlines() if not ln.startswith("#")][0]
    assert header == "number,title,passed,detail"
    rows = _rows(out)
    assert [r[0] for r in rows] == ["3", "6"]
    assert all(r[2] == "True" for r in rows)


def test_unknown_flag_is_a_usage_exit(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["eval", "--what", "exit-prob-zero", "--frobnicate", "1"])
    assert exc.value.code == 2


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("OCCULAB_THREADS", "2")
    assert run(["simulate", "--y", "0", "--T", "0.5", "--dt", "0.01",
                "--event", "eq_zero", "--n", "2000", "--seed", "4",
                "--no-timestamp"]) == 0
    with_env = capsys.readouterr().out
    monkeypatch.delenv("OCCULAB_THREADS")
    run(["simulate", "--y", "0", "--T", "0.5", "--dt", "0.01",
         "--event", "eq_zero", "--n", "2000", "--seed", "4",
         "--no-timestamp"])
    # worker count never changes the numbers
    assert capsys.readouterr().out == with_env


def test_threads_env_invalid_is_a_usage_error(monkeypatch, capsys):
    monkeypatch.setenv("OCCULAB_THREADS", "banana")
    assert run(["simulate", "--y", "0", "--T", "0.5", "--dt", "0.01",
                "--n", "100"]) == 2
    assert "OCCULAB_THREADS" in capsys.readouterr().err
