import csv
import io
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from multisd.cli import RunConfig, build_parser, clean, main
from multisd.schemas import SCHEMAS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, schema, *argv):
    code, out, _ = run(capsys, *argv)
    payload = json.loads(out)
    jsonschema.validate(payload, SCHEMAS[schema])
    return code, payload


@pytest.fixture
def gamma_spec(tmp_path):
    p = tmp_path / "gamma.json"
    p.write_text(json.dumps({"kind": "subordinator", "drift": 0, "density": {"name": "gamma"}}))
    return str(p)


def test_schemas_are_valid():
    for schema in SCHEMAS.values():
        jsonschema.Draft202012Validator.check_schema(schema)


def test_defaults():
    cfg = RunConfig.from_args(build_parser().parse_args(["constants"]))
    assert cfg.tol == 1e-9 and cfg.seed == 42 and cfg.samples == 100_000
    assert (cfg.grid.lo, cfg.grid.hi, cfg.grid.points, cfg.grid.spacing) == (1e-4, 1e4, 2048, "log")
    assert cfg.output is None and cfg.format == "json"


def test_clean():
    assert clean(0.1 + 0.2) == 0.3
    assert clean([math.nan, math.inf, 1]) == [None, None, 1]
    assert clean({"a": np.float64(1.0) / 3}) == {"a": float("%.15g" % (1 / 3))}


class TestConstants:
    def test_json(self, capsys):
        code, d = run_json(capsys, "constants", "constants", "--format", "json")
        assert code == 0
        assert abs(d["t0"] - 0.788675134594813) <= 1e-9
        assert abs(d["x0"] - 4.35463796993) <= 1e-8 and d["x0_residual"] < 1e-10
        assert abs(d["t1"] - 0.1516) <= 2e-4
        diffs = d["reports"]["t1"]["abs_diffs"]
        assert diffs == pytest.approx([abs(d["t1"] - 0.151649938034), abs(d["t1"] - 0.151463487259)], abs=1e-14)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "constants", "--format", "csv")
        assert code == 0 and "\r\n" in out
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][:2] == ["name", "value"] and [r[0] for r in rows[1:]] == ["t0", "x0", "t1"]

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        code, out, _ = run(capsys, "constants", "--output", str(path))
        assert code == 0 and out == ""
        jsonschema.validate(json.loads(path.read_text()), SCHEMAS["constants"])


class TestCmCheck:
    def test_member(self, capsys):
        code, d = run_json(capsys, "mn_certificate", "cm-check", "mellin_ratio", "--alpha", "0.5,0.5",
                           "--t", "0.5", "--order", "8", "--grid-min", "0.01", "--grid-max", "50",
                           "--grid-spacing", "linear", "--grid-points", "400")
        assert code == 0 and d["verdict"] == "member"

    def test_nonmember_exit_1(self, capsys):
        code, d = run_json(capsys, "mn_certificate", "cm-check", "poly_exp", "--order", "2",
                           "--grid-min", "0.01", "--grid-max", "10", "--grid-spacing", "linear")
        assert code == 1 and d["verdict"] == "nonmember" and d["witness"] is not None


class TestClassify:
    def test_gamma(self, capsys, gamma_spec):
        code, d = run_json(capsys, "sd_verdict", "classify", "--triplet", gamma_spec, "--nmax", "4")
        assert code == 0 and d["max_verified_n"] == 0
        assert 0 < d["orders"][1]["witness"] < 1

    def test_require_n(self, capsys, gamma_spec):
        assert run(capsys, "classify", "--triplet", gamma_spec, "--nmax", "2", "--require-n", "1")[0] == 1

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "classify", "--triplet", str(tmp_path / "none.json"))
        assert code == 2 and "error" in err

    def test_bad_density(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"density": {"name": "weibull"}}))
        assert run(capsys, "classify", "--triplet", str(p))[0] == 2


class TestVerify:
    def test_gordon_example(self, capsys):
        code, d = run_json(capsys, "verification", "verify", "gordon", "--p", "2", "--t", "1",
                           "--samples", "100000", "--seed", "7")
        assert code == 0 and d["pass"] and d["ks"]["p_value"] > 1e-3

    def test_gordon_negative_control(self, capsys):
        code, d = run_json(capsys, "verification", "verify", "gordon", "--p", "2", "--t", "1", "--t-scale", "1.2")
        assert code == 1 and not d["pass"]

    def test_factorization_controls(self, capsys):
        base = ["verify", "factorization", "--alpha", "0.5,0.5", "--t", "1", "--samples", "200000"]
        code, d = run_json(capsys, "verification", *base)
        assert code == 0 and [r["lambda"] for r in d["per_lambda"]] == [0.5, 1.0, 2.0]
        assert run_json(capsys, "verification", *base, "--corrupt-d")[0] == 1

    @pytest.mark.parametrize("argv", [["stable-mellin", "--alpha", "0.7", "--samples", "200000"],
                                      ["kanter", "--alpha", "0.5"], ["half-stable", "--samples", "50000"],
                                      ["gamma-moments", "--t", "0.5"]])
    def test_other_identities(self, capsys, argv):
        code, d = run_json(capsys, "verification", "verify", *argv)
        assert code == 0 and d["pass"]

    def test_determinism(self, capsys):
        argv = ["verify", "stable-mellin", "--alpha", "0.6", "--lambdas", "0.5,1", "--samples", "20000"]
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]
        other = run(capsys, *argv, "--seed", "43")[1]
        assert other != run(capsys, *argv)[1]

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "verify", "kanter", "--alpha", "0.5", "--lambdas", "0,1", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["lambda", "empirical", "se", "analytic", "z"] and len(rows) == 3

    @pytest.mark.parametrize("argv", [["gordon", "--t", "1"], ["kanter"], ["nonsense"],
                                      ["gordon", "--p", "1", "--t", "1"], ["kanter", "--alpha", "x"]])
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, "verify", *argv)[0] == 2


class TestEval:
    def test_g_kernel_example(self, capsys):
        code, d = run_json(capsys, "grid_values", "eval", "g_kernel", "--alpha", "0.6", "--t", "0.5")
        assert code == 0 and len(d["rows"]) == 2048
        assert min(r[1] for r in d["rows"]) >= -1e-10

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "eval", "e_kernel", "--t", "1", "--format", "csv", "--grid-points", "5")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["x", "e_kernel"] and len(rows) == 6
        x, y = map(float, rows[3])
        assert y == pytest.approx(math.exp(-x) / -math.expm1(-x), rel=1e-14)

    def test_all_functions_run(self, capsys):
        params = {"e_kernel": ["--t", "0.5"], "g_kernel": ["--alpha", "0.4", "--t", "0.5"],
                  "h_kernel": ["--alpha", "0.4", "--t", "0.5"], "h_multi": ["--alpha", "0.2,0.8", "--t", "1"],
                  "m_measure": ["--alpha", "0.5,0.5", "--t", "1"], "mellin_ratio": ["--alpha", "0.5,0.5", "--t", "1"],
                  "G_alpha_t": ["--alpha", "0.5", "--t", "1"], "G_alpha": ["--alpha", "0.5"],
                  "P_poly": ["--t", "0.7"], "Q_poly": ["--t", "0.2"], "delta_P": [], "delta_Q": [],
                  "t_plus_P": [], "t_plus_Q": ["--grid-min", "5", "--grid-max", "60"], "poly_exp": []}
        for name, extra in params.items():
            code, d = run_json(capsys, "grid_values", "eval", name, "--grid-points", "16", *extra)
            assert code == 0, name

    def test_missing_param(self, capsys):
        assert run(capsys, "eval", "g_kernel", "--t", "0.5")[0] == 2


class TestHadamard:
    @pytest.mark.parametrize("n", [1, 2])
    def test_check(self, capsys, n):
        code, d = run_json(capsys, "grid_values", "hadamard", "--density", "exp", "--n", str(n), "--check",
                           "--grid-min", "0.1", "--grid-max", "5", "--grid-spacing", "linear", "--grid-points", "50")
        assert code == 0 and d["summary"]["max_deviation"] <= 1e-5

    def test_check_failure_exit(self, capsys):
        code, _, _ = run(capsys, "hadamard", "--n", "1", "--check", "--check-tol", "1e-30",
                         "--grid-min", "0.1", "--grid-max", "5", "--grid-spacing", "linear", "--grid-points", "10")
        assert code == 1


class TestSample:
    def test_csv_header_and_determinism(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert run(capsys, "sample", "stable", "--alpha", "0.5", "--samples", "200", "--format", "csv",
                       "--output", str(p))[0] == 0
        assert a.read_bytes() == b.read_bytes()
        with open(a, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["index", "value"] and len(rows) == 201

    def test_json(self, capsys):
        code, d = run_json(capsys, "grid_values", "sample", "gamma", "--t", "2", "--samples", "1000")
        assert code == 0 and len(d["rows"]) == 1000 and abs(d["summary"]["mean"] - 2) < 0.3


class TestSchemaCommand:
    @pytest.mark.parametrize("name", sorted(SCHEMAS))
    def test_prints(self, capsys, name):
        code, out, _ = run(capsys, "schema", name)
        assert code == 0 and json.loads(out) == SCHEMAS[name]


def test_usage_exit_codes(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "constants", "--grid-points", "1")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "multisd", "constants"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["x0"] == pytest.approx(4.35463796993, abs=1e-8)
