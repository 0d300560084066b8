"""Command-line surface: validation, round trips, determinism, exit codes."""
import json
import subprocess
import sys

import numpy as np
import pytest

from matconc import cli
from matconc.errors import ValidationError


def run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "matconc.cli", *argv],
        capture_output=True, text=True)
    return proc


def write_spec(tmp_path, body, name="prob.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


BASE = {
    "schema": "matconc-problem/1",
    "chain": {"leon_perron": {"pi": [0.5, 0.5], "lambda": 0.3}},
    "observable": {"generator": "rademacher_diag", "d": 2},
    "n": 5,
    "mode": "hoeffding",
}


class TestProblemValidation:
    def test_unknown_chain_kind(self, tmp_path):
        spec = dict(BASE, chain={"mystery": {}})
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec))
        assert proc.returncode == cli.EXIT_SPEC
        assert "chain" in proc.stderr

    def test_field_path_in_error(self, tmp_path):
        spec = dict(BASE, chain={"leon_perron": {"pi": [0.5, 0.5]}})
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec))
        assert proc.returncode == cli.EXIT_SPEC
        assert "chain.leon_perron" in proc.stderr

    def test_bad_mode(self, tmp_path):
        spec = dict(BASE, mode="median")
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec))
        assert proc.returncode == cli.EXIT_SPEC
        assert "mode" in proc.stderr

    def test_mean_zero_revalidated_on_load(self, tmp_path):
        spec = dict(BASE)
        spec["observable"] = {"matrices": [[[1.0, 0.0], [0.0, 1.0]],
                                           [[1.0, 0.0], [0.0, 1.0]]]}
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec))
        assert proc.returncode == cli.EXIT_SPEC
        assert "mean zero" in proc.stderr

    def test_round_trip_echo(self, tmp_path):
        norm = cli.normalize_problem(dict(BASE))
        assert cli.normalize_problem(norm) == norm


class TestBoundCommand:
    def test_hoeffding_curve(self, tmp_path):
        proc = run_cli("bound", "--spec", write_spec(tmp_path, BASE),
                       "--theta-grid", "0.1:0.5:3", "--t-grid", "1:4:3")
        assert proc.returncode == 0
        rep = json.loads(proc.stdout)
        mgf = [r for r in rep["results"] if r["name"] == "mgf_bound"]
        tails = [r for r in rep["results"] if r["name"] == "tail_bound"]
        assert len(mgf) == 3 and len(tails) == 3
        assert all(r["formula_id"] == "hoeffding-mgf" for r in mgf)
        # scalar-free check per the closed form d*exp(theta^2*alpha*S/8)
        alpha = 1.3 / 0.7
        s = 4.0 * 5
        want = 2.0 * np.exp(0.1**2 * alpha * s / 8.0)
        assert mgf[0]["value"] == pytest.approx(want, rel=1e-12)

    def test_bernstein_domain_clamp_and_warnings(self, tmp_path):
        spec = dict(BASE, mode="bernstein")
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec),
                       "--theta-grid", "0.5:3.0:4")
        assert proc.returncode == 0
        rep = json.loads(proc.stdout)
        assert any(w.startswith("theta-clamp") for w in rep["warnings"])
        assert any(w.startswith("bernstein-domain") for w in rep["warnings"])
        assert any(w.startswith("bernstein-tail-sign") for w in rep["warnings"])
        assert any(w.startswith("bernstein-alpha1") for w in rep["warnings"])
        # the clamped rows sit 1e-9 inside the boundary where the bound
        # has blown past the float range
        clamped = [r for r in rep["results"] if r["value"] == "inf"]
        assert clamped
        cap = np.log(1.0 / 0.3)  # log(1/lam)/M with M = 1
        assert clamped[0]["theta"] == pytest.approx(cap - 1e-9, abs=1e-12)

    def test_complex_doubles_bounds(self, tmp_path):
        # pin the declared ranges so the only difference between the two
        # runs is the embedding correction itself
        base = dict(BASE, hoeffding_bounds=[[-1.2, 1.2]] * BASE["n"])
        base["observable"] = {"matrices": [[[1.0, 0.0], [0.0, -1.0]],
                                           [[-1.0, 0.0], [0.0, 1.0]]]}
        plain = run_cli("bound", "--spec", write_spec(tmp_path, base),
                        "--theta-grid", "0.2:0.2:1", "--t-grid", "2:2:1")
        withim = dict(base, complex=True)
        withim["observable"] = dict(base["observable"],
                                    matrices_im=[[[0.0, 0.5], [-0.5, 0.0]],
                                                 [[0.0, -0.5], [0.5, 0.0]]])
        doubled = run_cli("bound", "--spec", write_spec(tmp_path, withim, "c.json"),
                          "--theta-grid", "0.2:0.2:1", "--t-grid", "2:2:1")
        assert plain.returncode == 0 and doubled.returncode == 0
        rep_p = json.loads(plain.stdout)
        rep_c = json.loads(doubled.stdout)
        tail_p = [r for r in rep_p["results"] if r["name"] == "tail_bound"][0]
        tail_c = [r for r in rep_c["results"] if r["name"] == "tail_bound"][0]
        assert ["complex-embedding", 2.0] in tail_c["corrections"]
        assert any("complex-embedding" in w for w in rep_c["warnings"])
        # same declared ranges, same d in the formula: exactly double
        assert tail_c["value"] == pytest.approx(2.0 * tail_p["value"], rel=1e-9)

    def test_nonstationary_factor_and_flag(self, tmp_path):
        spec = dict(BASE, initial=[1.0, 0.0])
        proc = run_cli("bound", "--spec", write_spec(tmp_path, spec),
                       "--t-grid", "2:2:1")
        rep = json.loads(proc.stdout)
        tail = [r for r in rep["results"] if r["name"] == "tail_bound"][0]
        names = [c[0] for c in tail["corrections"]]
        assert "nonstationary-factor" in names
        assert any("Hoelder" in w for w in rep["warnings"])
        factor = dict((c[0], c[1]) for c in tail["corrections"])["nonstationary-factor"]
        assert factor == pytest.approx(np.sqrt(2.0))


class TestExactCommand:
    def test_theta_zero_row_is_dimension(self, tmp_path):
        proc = run_cli("exact", "--spec", write_spec(tmp_path, BASE),
                       "--theta-grid", "0:0.4:2")
        rep = json.loads(proc.stdout)
        assert rep["results"][0]["value"] == 2.0

    def test_oracle_column_agrees(self, tmp_path):
        proc = run_cli("exact", "--spec", write_spec(tmp_path, BASE),
                       "--theta-grid", "0.2:0.8:4", "--oracle")
        rep = json.loads(proc.stdout)
        for row in rep["results"]:
            assert row["value"] == pytest.approx(row["oracle"], rel=1e-10)

    def test_growth_columns_agree(self, tmp_path):
        proc = run_cli("exact", "--spec", write_spec(tmp_path, BASE),
                       "--theta-grid", "0.3:0.9:3")
        rep = json.loads(proc.stdout)
        for row in rep["results"]:
            assert row["growth_root"] == pytest.approx(
                row["leading_eigenvalue"], abs=1e-8)

    def test_cap_error(self, tmp_path):
        spec = dict(BASE, n=25)
        proc = run_cli("exact", "--spec", write_spec(tmp_path, spec), "--oracle")
        assert proc.returncode == cli.EXIT_SPEC
        assert "reduce" in proc.stderr


class TestSimulateCommand:
    def test_byte_identical_outputs(self, tmp_path):
        spec_path = write_spec(tmp_path, BASE)
        argv = ["simulate", "--spec", spec_path, "--trials", "1500",
                "--seed", "42", "--t-grid", "1:4:3"]
        a = run_cli(*argv, "--csv", str(tmp_path / "a.csv"))
        b = run_cli(*argv, "--csv", str(tmp_path / "b.csv"))
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_ci_width_scales_with_trials(self, tmp_path):
        spec_path = write_spec(tmp_path, BASE)

        def width(trials):
            proc = run_cli("simulate", "--spec", spec_path, "--trials",
                           str(trials), "--seed", "7", "--t-grid", "2:2:1")
            row = json.loads(proc.stdout)["results"][0]
            return row["ci_high"] - row["ci_low"]

        ratio = width(400) / width(40000)
        assert 6.0 < ratio < 16.0  # ~ sqrt(100) = 10

    def test_csv_schema(self, tmp_path):
        out = tmp_path / "rows.csv"
        run_cli("simulate", "--spec", write_spec(tmp_path, BASE),
                "--trials", "200", "--seed", "1", "--t-grid", "2:3:2",
                "--csv", str(out))
        lines = out.read_text().splitlines()
        assert lines[0] == "quantity,n,theta,phi,point,ci_low,ci_high,trials,seed"
        assert len(lines) == 1 + 2 * 2  # estimate + bound row per t

    def test_empirical_upper_ci_below_bound(self, tmp_path):
        proc = run_cli("simulate", "--spec", write_spec(tmp_path, BASE),
                       "--trials", "20000", "--seed", "3")
        rep = json.loads(proc.stdout)
        for row in rep["results"]:
            assert row["ci_high"] <= row["bound"] + 1e-12

    def test_lower_tail_negation(self, tmp_path):
        # symmetric observable: lower and upper tail bounds coincide
        spec_upper = dict(BASE)
        spec_lower = dict(BASE, tail="lower")
        a = run_cli("bound", "--spec", write_spec(tmp_path, spec_upper),
                    "--t-grid", "2:2:1")
        b = run_cli("bound", "--spec", write_spec(tmp_path, spec_lower, "l.json"),
                    "--t-grid", "2:2:1")
        va = [r for r in json.loads(a.stdout)["results"] if r["name"] == "tail_bound"][0]
        vb = [r for r in json.loads(b.stdout)["results"] if r["name"] == "tail_bound"][0]
        assert va["value"] == pytest.approx(vb["value"], rel=1e-12)
        assert any(w.startswith("lower-tail") for w in json.loads(b.stdout)["warnings"])


class TestVerifyCommand:
    def test_clean_suite_exit_zero(self):
        proc = run_cli("verify", "--suite-size", "4", "--trials", "2000",
                       "--seed", "1")
        assert proc.returncode == 0
        assert "total violations: 0" in proc.stdout

    def test_json_records(self):
        proc = run_cli("verify", "--suite-size", "4", "--trials", "2000",
                       "--seed", "1", "--json")
        rep = json.loads(proc.stdout)
        assert rep["violations_total"] == 0
        assert all({"inequality_id", "instances_tested", "violations",
                    "worst_margin", "note"} <= set(r) for r in rep["records"])

    def test_injected_violation_exit_code(self):
        proc = run_cli("verify", "--suite-size", "4", "--trials", "2000",
                       "--seed", "1", "--inject-violation", "two-state-eta-envelope")
        assert proc.returncode == cli.EXIT_VIOLATION
        assert "two-state-eta-envelope" in proc.stdout

    def test_byte_identical(self):
        argv = ["verify", "--suite-size", "4", "--trials", "2000",
                "--seed", "9", "--json"]
        assert run_cli(*argv).stdout == run_cli(*argv).stdout
