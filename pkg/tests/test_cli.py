"""Integration tests for the command-line interface.

Commands run in-process through main(argv); exit codes and byte-level
determinism are part of the contract.
"""
import json
import math

import numpy as np
import pytest

import ldboot.cli as cli
from ldboot.errors import NumericError


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(args):
    return cli.main(args)


# -----------------------------------------------------------------------------
# sample
# -----------------------------------------------------------------------------
def test_sample_delete_h_all_ones(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scheme": {"variant": "delete_h", "alpha": 0.0},
                                  "n": 3, "replications": 2})
    out = tmp_path / "w.csv"
    assert run(["sample", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "w1,w2,w3"
    assert lines[1:] == ["1.0,1.0,1.0", "1.0,1.0,1.0"]


def test_sample_rows_sum_to_n(tmp_path):
    cfg = write_config(tmp_path, {"scheme": {"variant": "m_out_of_n", "lambda": 1.0},
                                  "n": 4, "replications": 8})
    out = tmp_path / "w.csv"
    assert run(["sample", "--config", cfg, "--seed", "4", "--out", str(out)]) == 0
    for line in out.read_text().strip().splitlines()[1:]:
        assert math.isclose(sum(float(v) for v in line.split(",")), 4.0)


def test_sample_deterministic_reruns(tmp_path):
    cfg = write_config(tmp_path, {"scheme": {"variant": "hypergeometric", "K": 3},
                                  "n": 6, "replications": 5})
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["sample", "--config", cfg, "--seed", "9", "--out", str(out1)]) == 0
    assert run(["sample", "--config", cfg, "--seed", "9", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_sample_schema_rejection(tmp_path):
    cfg = write_config(tmp_path, {"scheme": {"variant": "m_out_of_n"}, "n": 4,
                                  "replications": 2})
    assert run(["sample", "--config", cfg]) == 1
    cfg2 = write_config(tmp_path, {"scheme": {"variant": "m_out_of_n", "lambda": 1.0},
                                   "n": 4, "replications": 2, "bogus": True},
                        name="c2.json")
    assert run(["sample", "--config", cfg2]) == 1


# -----------------------------------------------------------------------------
# rate
# -----------------------------------------------------------------------------
def test_rate_efron_value(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scheme": {"variant": "m_out_of_n", "lambda": 1.0},
                                  "nu": [0.8, 0.2], "mu": [0.5, 0.5]})
    assert run(["rate", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    want = 0.8 * math.log(1.6) + 0.2 * math.log(0.4)
    assert math.isclose(doc["value"], want, rel_tol=1e-9)
    assert "kullback_identity" in doc["oracle_checks_run"]


def test_rate_jackknife_infeasible_reason(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scheme": {"variant": "delete_h", "alpha": 0.2},
                                  "nu": [0.9, 0.1], "mu": [0.5, 0.5]})
    assert run(["rate", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == "inf"
    assert doc["reason"] == "chi_not_probability"


def test_rate_k_blocks_matches_efron(tmp_path, capsys):
    nu, mu = [0.7, 0.3], [0.4, 0.6]
    cfg1 = write_config(tmp_path, {"scheme": {"variant": "k_blocks", "k": 2,
                                              "style": "circular"},
                                   "nu": nu, "mu": mu}, name="kb.json")
    assert run(["rate", "--config", cfg1]) == 0
    kb = json.loads(capsys.readouterr().out)
    cfg2 = write_config(tmp_path, {"scheme": {"variant": "m_out_of_n", "lambda": 1.0},
                                   "nu": nu, "mu": mu}, name="ef.json")
    assert run(["rate", "--config", cfg2]) == 0
    ef = json.loads(capsys.readouterr().out)
    assert math.isclose(kb["value"], ef["value"], abs_tol=1e-6)
    assert "iid_identity" in kb["oracle_checks_run"]


def test_rate_numeric_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericError("synthetic failure", {"iterations": 1})
    monkeypatch.setattr(cli, "rate_k_blocks", boom)
    cfg = write_config(tmp_path, {"scheme": {"variant": "k_blocks", "k": 2,
                                             "style": "circular"},
                                  "nu": [0.7, 0.3], "mu": [0.4, 0.6]})
    assert run(["rate", "--config", cfg]) == 2


# -----------------------------------------------------------------------------
# verify-ldp
# -----------------------------------------------------------------------------
def test_verify_ldp_trivial_pass(tmp_path):
    doc = {
        "scheme": {"variant": "m_out_of_n", "lambda": 1.0},
        "observations": {"mode": "composition", "mass": [0.5, 0.5]},
        "target": [0.8, 0.2], "epsilon": 0.05,
        "n_values": [50, 100, 200], "replications": 20000,
        "estimator": "tilted", "max_relative_gap": 0.25,
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "run.csv"
    assert run(["verify-ldp", "--config", cfg, "--seed", "1",
                "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "n,p_hat,stderr,log_p"
    assert len(rows) == 4
    summary = json.loads((tmp_path / "run.csv.summary.json").read_text())
    assert summary["pass"] is True
    assert summary["analytic_ball_infimum"] > 0


def test_verify_ldp_zero_hits_warning(tmp_path):
    doc = {
        "scheme": {"variant": "m_out_of_n", "lambda": 1.0},
        "observations": {"mode": "composition", "mass": [0.5, 0.5]},
        "target": [0.98, 0.02], "epsilon": 0.01,
        "n_values": [50, 100], "replications": 1000,
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "run.csv"
    assert run(["verify-ldp", "--config", cfg, "--out", str(out)]) == 3
    assert (tmp_path / "run.csv.summary.json").exists()


def test_verify_ldp_rejects_decreasing_n(tmp_path):
    doc = {
        "scheme": {"variant": "m_out_of_n", "lambda": 1.0},
        "observations": {"mode": "composition", "mass": [0.5, 0.5]},
        "target": [0.8, 0.2], "epsilon": 0.05,
        "n_values": [200, 100], "replications": 2000,
    }
    cfg = write_config(tmp_path, doc)
    assert run(["verify-ldp", "--config", cfg]) == 1


def test_verify_ldp_reruns_identical(tmp_path):
    doc = {
        "scheme": {"variant": "delete_h", "alpha": 0.5},
        "observations": {"mode": "composition", "mass": [0.5, 0.5]},
        "target": [0.6, 0.4], "epsilon": 0.2,
        "n_values": [24, 48], "replications": 4000,
    }
    cfg = write_config(tmp_path, doc)
    outs = []
    for name in ("r1.csv", "r2.csv"):
        out = tmp_path / name
        run(["verify-ldp", "--config", cfg, "--seed", "3", "--out", str(out)])
        outs.append(out.read_bytes() + (tmp_path / (name + ".summary.json")).read_bytes())
    assert outs[0] == outs[1]


# -----------------------------------------------------------------------------
# couple
# -----------------------------------------------------------------------------
def test_couple_single_urn(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n": 1, "m": 7, "replications": 2000})
    assert run(["couple", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["optimality_violations"] == 0
    assert doc["mean_w1_m_vs_z"] >= 0.0


def test_couple_diagnostics(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n": 20, "m": 20, "replications": 20000,
                                  "competitors": 50})
    assert run(["couple", "--config", cfg, "--seed", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["optimality_violations"] == 0
    assert doc["chi_square_p"] > 0.001
    assert abs(doc["exact_branch_z"]) < 3.0


# -----------------------------------------------------------------------------
# legendre
# -----------------------------------------------------------------------------
def test_legendre_table_and_discrepancy(tmp_path):
    cfg = write_config(tmp_path, {"cgf": {"kind": "scaled_poisson", "lambda": 1.0},
                                  "x_grid": [0, 1, 2, 3, 4, 5]})
    out = tmp_path / "tab.csv"
    assert run(["legendre", "--config", cfg, "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "x,closed_form,numeric"
    x1 = rows[2].split(",")
    assert float(x1[1]) == 0.0 and abs(float(x1[2])) <= 1e-10
    for row in rows[1:]:
        x, closed, numeric = row.split(",")
        if closed not in ("", "inf"):
            assert abs(float(closed) - float(numeric)) <= 1e-8


def test_legendre_binomial_inf_row(tmp_path, capsys):
    cfg = write_config(tmp_path, {"cgf": {"kind": "binomial", "K": 2},
                                  "x_grid": [1, 3]})
    assert run(["legendre", "--config", cfg, "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][1]["numeric"] == "inf"
    assert doc["rows"][1]["closed_form"] == "inf"
    assert doc["max_abs_discrepancy"] <= 1e-8


def test_legendre_bad_cgf_rejected(tmp_path):
    cfg = write_config(tmp_path, {"cgf": {"kind": "mystery"}, "x_grid": [1]})
    assert run(["legendre", "--config", cfg]) == 1


# -----------------------------------------------------------------------------
# w1
# -----------------------------------------------------------------------------
def test_w1_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {"a": [0, 0, 0], "b": [1, 1, 1]})
    assert run(["w1", "--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out)["w1"] == 1.0


def test_w1_mismatch_rejected(tmp_path):
    cfg = write_config(tmp_path, {"a": [0, 0], "b": [1, 1, 1]})
    assert run(["w1", "--config", cfg]) == 1


# -----------------------------------------------------------------------------
# stdin config
# -----------------------------------------------------------------------------
def test_stdin_config(monkeypatch, capsys):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(
        {"a": [1.0, 2.0], "b": [2.0, 1.0]})))
    assert run(["w1", "--config", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["w1"] == 0.0
