import json
import subprocess
import sys

import jsonschema
import pytest

from conftest import COIN_OR_OMEGA, GEOMETRIC, OMEGA
from pcfbounds.bounds import REPORT_SCHEMA
from pcfbounds.cli import main
from pcfbounds.syntax import LOWER, parse, render, unfold


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text + "\n")
        return str(p)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def without_timing(doc):
    return {k: v for k, v in doc.items() if k != "wall_ms"}


class TestBound:
    def test_geometric_refinement_json(self, capsys, write):
        code, out, _ = run(capsys, "bound", write("geo.pcf", GEOMETRIC), "--dist", "", "--epsilon", "1/100", "--json")
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, REPORT_SCHEMA)
        assert doc["converged"] is True
        assert doc["upper_float"] - doc["lower_float"] <= 0.01

    def test_not_nat_is_exit_2(self, capsys, write):
        code, _, err = run(capsys, "bound", write("id.pcf", r"\x: nat. x"))
        assert code == 2 and "expected nat" in err

    def test_parse_error_is_exit_2(self, capsys, write):
        code, _, err = run(capsys, "bound", write("bad.pcf", "succ )"))
        assert code == 2 and "1:6" in err

    def test_J_override(self, capsys, write):
        path = write("open.pcf", "if x then 0 else succ x")
        code, out, _ = run(capsys, "bound", path, "--dist", "x={0: 1/2}", "--k", "4", "--J", "0,1,2", "--json")
        assert code == 0 and json.loads(out)["J"] == [0, 1, 2]

    def test_free_variable_at_function_type_is_exit_3(self, capsys, write):
        code, _, err = run(capsys, "bound", write("f.pcf", "x 3"), "--dist", "x={0: 1}")
        assert code == 3 and "'x'" in err

    def test_missing_dist_is_exit_3(self, capsys, write):
        code, _, _ = run(capsys, "bound", write("open.pcf", "succ x"))
        assert code == 3

    def test_float_distribution_rejected(self, capsys, write):
        code, _, err = run(capsys, "bound", write("open.pcf", "succ x"), "--dist", "x={0: 0.5}")
        assert code == 2

    def test_float_epsilon_rejected(self, write):
        with pytest.raises(SystemExit):
            main(["bound", write("geo.pcf", GEOMETRIC), "--epsilon", "0.01"])

    def test_errconv_in_input_warns(self, capsys, write):
        code, _, err = run(capsys, "bound", write("e.pcf", "err+"))
        assert code == 0 and "warning" in err
        code, _, err = run(capsys, "bound", write("e.pcf", "err+"), "--raw")
        assert "warning" not in err

    def test_text_report(self, capsys, write):
        code, out, _ = run(capsys, "bound", write("c.pcf", COIN_OR_OMEGA), "--epsilon", "1/10", "--k-max", "4")
        assert code == 0
        assert "lower  1/2" in out and "converged  no" in out

    def test_identical_runs_identical_output(self, capsys, write):
        path = write("geo.pcf", GEOMETRIC)
        _, first, _ = run(capsys, "bound", path, "--epsilon", "1/100", "--json")
        _, second, _ = run(capsys, "bound", path, "--epsilon", "1/100", "--json")
        assert without_timing(json.loads(first)) == without_timing(json.loads(second))
        _, t1, _ = run(capsys, "bound", path, "--k", "5")
        _, t2, _ = run(capsys, "bound", path, "--k", "5")
        assert t1 == t2


class TestRun:
    def test_seeded_runs_identical(self, capsys, write):
        path = write("coin.pcf", "coin(1/2)")
        _, a, _ = run(capsys, "run", path, "--samples", "1000", "--seed", "7")
        _, b, _ = run(capsys, "run", path, "--samples", "1000", "--seed", "7")
        assert a == b and "0 " in a

    def test_omega_times_out(self, capsys, write):
        code, out, _ = run(capsys, "run", write("omega.pcf", OMEGA), "--samples", "10", "--max-steps", "20", "--json")
        assert code == 0
        assert json.loads(out)["outcomes"] == [{"outcome": "timeout", "count": 10, "freq": 1.0, "stderr": 0.0}]

    def test_geometric_returns_zero(self, capsys, write):
        _, out, _ = run(capsys, "run", write("geo.pcf", GEOMETRIC), "--samples", "10000", "--seed", "1", "--json")
        (row,) = json.loads(out)["outcomes"]
        assert row["outcome"] == "0" and row["freq"] == 1.0

    def test_free_variables_exit_3(self, capsys, write):
        code, _, _ = run(capsys, "run", write("open.pcf", "succ x"))
        assert code == 3


class TestOrder:
    def test_errdiv_below(self, capsys, write):
        code, out, _ = run(capsys, "order", write("a.pcf", "err-"), write("b.pcf", GEOMETRIC))
        assert code == 0 and out.strip() == "yes"

    def test_numerals(self, capsys, write):
        code, _, _ = run(capsys, "order", write("a.pcf", "0"), write("b.pcf", "1"))
        assert code == 1

    def test_lower_unfolding_below(self, capsys, write):
        m = parse(GEOMETRIC)
        code, _, _ = run(capsys, "order", write("a.pcf", render(unfold(m, 3, LOWER))), write("b.pcf", GEOMETRIC))
        assert code == 0

    def test_type_mismatch_exit_2(self, capsys, write):
        code, _, _ = run(capsys, "order", write("a.pcf", "0"), write("b.pcf", r"\x: nat. x"))
        assert code == 2


class TestPoly:
    def test_variable(self, capsys, write):
        code, out, _ = run(capsys, "poly", write("x.pcf", "x"), "--J", "0")
        assert code == 0 and out.strip() == "x(0) + x(err)"

    def test_errors_raw(self, capsys, write):
        assert run(capsys, "poly", write("p.pcf", "err+"), "--raw")[1].strip() == "1"
        assert run(capsys, "poly", write("m.pcf", "err-"), "--raw")[1].strip() == "0"

    def test_unfolded_polarities(self, capsys, write):
        path = write("c.pcf", COIN_OR_OMEGA)
        assert run(capsys, "poly", path, "--k", "3")[1].strip() == "1/2"
        assert run(capsys, "poly", path, "--k", "3", "--polarity", "upper")[1].strip() == "1"

    def test_json(self, capsys, write):
        _, out, _ = run(capsys, "poly", write("x.pcf", "if x then err+ else 0"), "--J", "0,1", "--raw", "--json")
        assert json.loads(out) == {
            "terms": [
                {"coeff": "1/1", "exponents": {"x": {"0": 1}}},
                {"coeff": "1/1", "exponents": {"x": {"err": 1}}},
            ]
        }


class TestCheck:
    def test_ok(self, capsys, write):
        code, out, _ = run(capsys, "check", write("o.pcf", "succ x"))
        assert code == 0 and "x: nat" in out

    def test_stdin(self):
        proc = subprocess.run(
            [sys.executable, "-m", "pcfbounds.cli", "check", "-"], input="coin(1/2)", capture_output=True, text=True
        )
        assert proc.returncode == 0 and proc.stdout.startswith("ok")
