import io
import sys

import pytest

from ahpack.cli import EXIT_DATA, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main, parse_args
from ahpack.params import canonical_path, load_canonical, load_params
from ahpack.weights import published_table_paths


def run(argv, stdin=""):
    old = sys.stdin
    sys.stdin = io.StringIO(stdin)
    try:
        return main(argv)
    finally:
        sys.stdin = old


def test_parse_examples():
    cmd = parse_args(["pack", "--params", str(canonical_path())])
    assert cmd.verb == "pack"
    cmd = parse_args(["verify-scenario", "--x", "2/9", "--y", "3/13", "--w", "9224745/1073741824"])
    assert cmd.verb == "verify-scenario" and str(cmd.w) == "9224745/1073741824"


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["pack", "--nope"], ["verify-scenario", "--x", "1/0", "--y", "1/2"]])
def test_usage_errors(argv, capsys):
    assert run(argv) == EXIT_USAGE


def test_pack(capsys):
    assert run(["pack", "--audit"], "2/5\n3/5\n") == EXIT_OK
    out = capsys.readouterr()
    assert out.out == "0 3 0 temporary1 0\n1 1 1 type1 0 c0:temporary1->regular1\n"
    assert "bins=1" in out.err


def test_pack_malformed(capsys):
    assert run(["pack"], "1/2\nhalf\n") == EXIT_DATA
    assert run(["pack"], "3/2\n") == EXIT_DATA


def test_verify_scenario(capsys):
    code = run(["verify-scenario", "--x", "2/9", "--y", "3/13", "--w", "9224745/1073741824"])
    assert code == EXIT_OK
    assert "176162272658562716766643/111689991334728680079360" in capsys.readouterr().out


def test_verify_scenario_with_weight_table(capsys):
    path = [p for p in published_table_paths() if p.stem == "s_2_9"][0]
    code = run(["verify-scenario", "--x", "2/9", "--y", "3/13", "--weights", str(path)])
    assert code == EXIT_OK
    assert "176162272658562716766643/111689991334728680079360" in capsys.readouterr().out
    assert run(["verify-scenario", "--x", "3/7", "--y", "1/2", "--weights", str(path)]) == EXIT_DATA


def test_verify_scenario_failures(capsys):
    assert run(["verify-scenario", "--x", "2/9", "--y", "3/13", "--w", "2"]) == EXIT_FAIL
    assert run(["verify-scenario", "--x", "2/9", "--y", "3/13", "--w", "9224745/1073741824",
                "--target", "3/2"]) == EXIT_FAIL
    assert run(["verify-scenario", "--x", "43/120", "--y", "3/7"]) == EXIT_DATA


def test_verify_all(tmp_path, capsys):
    out = tmp_path / "report.txt"
    code = run(["verify-all", "--out", str(out), "--target",
                "10060574276093395247/6374352691333693440"])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("GLOBAL r=10060574276093395247/6374352691333693440")
    assert "uncovered (43/120,3/7]" in capsys.readouterr().err
    # a rerun resumes from the file and leaves exactly one footer
    assert run(["verify-all", "--out", str(out), "--target", "3/2"]) == EXIT_FAIL
    assert sum(l.startswith("GLOBAL") for l in out.read_text().splitlines()) == 1


def test_simulate(capsys):
    code = run(["simulate", "--gen", "uniform(1/1000,1)", "--n", "500", "--seed", "3", "--audit"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.startswith("items=500 bins=")
    assert "verdict=" in out


def test_opt(capsys):
    assert run(["opt"], "2/5\n2/5\n2/5\n3/5\n3/5\n3/5\n") == EXIT_OK
    assert capsys.readouterr().out.startswith("bins=3 method=exact")


def test_export_weights(tmp_path):
    out = tmp_path / "w.txt"
    assert run(["export-weights", "--x", "3/7", "--y", "1/2", "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert "rho=1209038869/1409286144" in text
    assert run(["export-weights", "--x", "43/120", "--y", "3/7"]) == EXIT_DATA


def test_reconstruct(tmp_path, capsys):
    out = tmp_path / "p.params"
    code = run(["reconstruct", "--hint", "169:1,4", "--hint", "183:1,3,14", "--out", str(out)])
    assert code == EXIT_OK
    assert load_params(out).alphas == load_canonical().alphas


def test_bad_params_file(tmp_path, capsys):
    bad = tmp_path / "bad.params"
    bad.write_text("[boundaries]\n1/1\n")
    assert run(["pack", "--params", str(bad)], "1/2\n") == EXIT_DATA
    assert run(["pack", "--params", str(tmp_path / "missing")], "1/2\n") == EXIT_DATA
