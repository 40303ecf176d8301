"""Experiment layer: report structure, CSV rendering, small deterministic
smoke runs of every named experiment.

Smoke parameters are desk-scale and seed-piloted; assertions on verdict
values are limited to checks that held deterministically at these seeds.
"""

import math

import numpy as np
import pytest

from occulab import ConfigError, DomainError, ExperimentReport, taboo_marginal_cdf
from occulab.experiments import (
    EXPERIMENTS,
    exp_cor_outside,
    exp_prop_asymp,
    exp_qsd_stationarity,
    exp_ratio_qsd,
    exp_thm_main,
)


@pytest.fixture(scope="module")
def ratio_report():
    return exp_ratio_qsd(
        y_list=(0.0,), s=0.5, T_list=(1.0, 1.5), n=3000, seed=5, dt=0.02
    )


@pytest.fixture(scope="module")
def thm_report():
    return exp_thm_main(
        y=0.0, s=0.5, T=2.0, t_probes=(0.5,), n_wanted=400, seed=9, dt=0.02
    )


def test_registry_names_every_experiment():
    assert sorted(EXPERIMENTS) == [
        "cor-outside", "prop-asymp", "qsd-stationarity", "ratio-qsd", "thm-main",
    ]
    assert EXPERIMENTS["ratio-qsd"] is exp_ratio_qsd
    assert all(callable(fn) for fn in EXPERIMENTS.values())


def test_ratio_qsd_report_structure(ratio_report):
    r = ratio_report
    assert isinstance(r, ExperimentReport)
    assert r.name == "ratio-qsd"
    assert r.seed == 5
    assert r.parameters["T_list"] == (1.0, 1.5)
    assert r.parameters["y_list"] == (0.0,)
    assert len(r.rows) == 2
    assert all(len(row) == len(r.columns) for row in r.rows)
    assert sorted(r.verdicts) == [
        "final_within_10pct_3se_y0", "trend_3sigma_y0", "trend_ordered_y0",
    ]
    assert all(isinstance(v, bool) for v in r.verdicts.values())
    assert r.verdicts["trend_ordered_y0"] is True
    assert r.verdicts["final_within_10pct_3se_y0"] is True
    assert r.passed == all(r.verdicts.values())
    with pytest.raises(TypeError):
        r.parameters["n"] = 0


def test_ratio_qsd_rows_are_probabilities(ratio_report):
    cols = ratio_report.columns
    for row in ratio_report.rows:
        rec = dict(zip(cols, row))
        assert 0.0 < rec["p_y"] < 1.0
        assert 0.0 < rec["p_nu"] < 1.0
        assert rec["degenerate"] is False
        assert rec["reference"] == pytest.approx(4.0 / math.pi)


def test_report_regenerates_bit_identically(ratio_report):
    again = exp_ratio_qsd(
        y_list=(0.0,), s=0.5, T_list=(1.0, 1.5), n=3000, seed=5, dt=0.02
    )
    assert again.rows == ratio_report.rows
    assert dict(again.verdicts) == dict(ratio_report.verdicts)
    assert again.to_csv(timestamp=False) == ratio_report.to_csv(timestamp=False)


def test_csv_layout(ratio_report, tmp_path):
    text = ratio_report.to_csv(timestamp=False)
    lines = text.splitlines()
    assert lines[0] == "# experiment=ratio-qsd"
    assert lines[1] == "# seed=5"
    assert "# verdict_trend_ordered_y0=True" in lines
    assert "# timestamp=" not in text
    header = ",".join(ratio_report.columns)
    assert lines.count(header) == 1
    body = lines[lines.index(header) + 1:]
    assert len(body) == len(ratio_report.rows)
    # timestamped variant differs only by the one metadata line
    stamped = ratio_report.to_csv(timestamp=True)
    assert "# timestamp=" in stamped
    # writing to a file reproduces the returned text
    out = tmp_path / "r.csv"
    returned = ratio_report.to_csv(path=out, timestamp=False)
    assert out.read_text() == returned == text


def test_qsd_stationarity_smoke_passes():
    r = exp_qsd_stationarity(t_list=(0.25,), n=4000, seed=3, dt=0.01)
    assert dict(r.verdicts) == {
        "survival_3sigma_t0.25": True, "ks_t0.25": True,
    }
    assert r.passed


def test_thm_main_smoke_structure(thm_report):
    r = thm_report
    assert sorted(r.verdicts) == [
        "closer_to_taboo_eq_zero_t0.5",
        "closer_to_taboo_leq_s_t0.5",
        "one_sample_1pct_eq_zero_t0.5",
        "one_sample_1pct_leq_s_t0.5",
        "two_sample_1pct_t0.5",
        "zero_fraction_increasing",
    ]
    assert {row[0] for row in r.rows} == {
        "one_sample", "two_sample", "zero_fraction",
    }
    # both conditioned laws sit closer to the taboo marginal than to the
    # unconditioned Gaussian at this seed
    assert r.verdicts["closer_to_taboo_leq_s_t0.5"] is True
    assert r.verdicts["closer_to_taboo_eq_zero_t0.5"] is True


def test_thm_main_rows_carry_acceptance(thm_report):
    cols = thm_report.columns
    one_sample = [r for r in thm_report.rows if r[0] == "one_sample"]
    assert len(one_sample) == 2
    for row in one_sample:
        rec = dict(zip(cols, row))
        assert rec["n"] == 400
        assert 0.0 < rec["acceptance_rate"] <= 1.0


def test_prop_asymp_smoke():
    r = exp_prop_asymp(
        y=0.0, s=0.5, T_list=(1.0, 2.0), dt=0.02, n=20000, seed=4,
        s_grid=(0.25, 0.5, 1.0),
    )
    assert {row[0] for row in r.rows} == {"horizon", "log_gap_fit", "s_scan"}
    assert dict(r.verdicts) == {
        "log_gap_decreasing": True,
        "zero_to_leq_decreasing_3sigma": True,
        "s_monotone_3sigma": True,
    }
    scan = [row for row in r.rows if row[0] == "s_scan"]
    assert [row[2] for row in scan] == [0.25, 0.5, 1.0]


def test_cor_outside_smoke():
    r = exp_cor_outside(
        y=1.2, s=0.5, eps_list=(0.05,), T_list=(1.0, 2.0), n=20000, seed=6,
        dt=0.01,
    )
    assert {row[0] for row in r.rows} == {"conditional", "outside_to_center"}
    assert sorted(r.verdicts) == [
        "decreasing_3sigma_eps0.05",
        "decreasing_ordered_eps0.05",
        "eps_small_near_one",
        "final_leq_half_initial_eps0.05",
        "outside_to_center_decreasing_3sigma",
    ]
    assert r.verdicts["decreasing_ordered_eps0.05"] is True
    assert r.verdicts["outside_to_center_decreasing_3sigma"] is True


def test_taboo_marginal_cdf_is_a_cdf():
    F = taboo_marginal_cdf(0.0, 0.5)
    xs = np.linspace(-1.0, 1.0, 201)
    vals = F(xs)
    assert vals[0] == 0.0
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(vals) >= 0.0)
    # symmetric start keeps the median at the origin
    assert F(0.0) == pytest.approx(0.5, abs=1e-8)
    # clamped outside the interval
    assert F(-2.0) == 0.0
    assert F(2.0) == pytest.approx(1.0, abs=1e-12)


def test_taboo_marginal_cdf_domain():
    with pytest.raises(DomainError):
        taboo_marginal_cdf(1.0, 0.5)
    with pytest.raises(DomainError):
        taboo_marginal_cdf(0.0, 0.0)


def test_experiment_validation():
    with pytest.raises(ConfigError):
        exp_ratio_qsd(T_list=(2.0, 1.0), n=100, seed=0, dt=0.02)
    with pytest.raises(ConfigError):
        exp_prop_asymp(T_list=(3.0,), n=100, seed=0, dt=0.02)
    with pytest.raises(DomainError):
        exp_cor_outside(y=0.5, n=100, seed=0, dt=0.02)
    with pytest.raises(DomainError):
        exp_thm_main(T=2.0, t_probes=(3.0,), n_wanted=10, seed=0, dt=0.02)
