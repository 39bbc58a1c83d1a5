import json

import pytest

from mlqkd.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_verify_pass_and_perturb(capsys):
    code, out = _run(capsys, "verify", "--M", "4", "5", "--nmax", "6")
    assert code == 0
    lines = out.out.splitlines()
    assert lines[0].startswith("# mlqkd") and "verify" in lines[0]
    assert lines[1].startswith("M,L,")
    code, _ = _run(capsys, "verify", "--M", "4", "--perturb", "1e-6")
    assert code == 1


def test_rate_auto(capsys):
    code, out = _run(capsys, "rate", "--M", "4", "--L", "1", "--eps", "0", "--eta", "1e-5",
                     "--mu", "auto")
    assert code == 0
    doc = json.loads(out.out)
    assert doc["result"]["gain"] > 0 and doc["config"]["K"] == 2


def test_rate_bb84(capsys):
    code, out = _run(capsys, "rate", "--M", "4", "--L", "2", "--eps", "0.05", "--eta", "1e-3",
                     "--mu", "0.0005")
    assert code == 0 and json.loads(out.out)["result"]["K"] == 1


def test_usage_errors(capsys):
    assert _run(capsys, "rate", "--M", "4", "--L", "3", "--eta", "1e-5")[0] == 2
    assert _run(capsys, "scan", "--M", "4", "--L", "1", "--eps-range", "bad")[0] == 2
    assert _run(capsys, "threshold", "--K", "2")[0] == 2
    assert _run(capsys, "asymptotic", "--M", "4", "--L", "1", "--K", "3")[0] == 2


def test_asymptotic_points(capsys):
    code, out = _run(capsys, "asymptotic", "--M", "4", "--L", "1", "--gamma", "0", "--eps", "0")
    assert code == 0 and json.loads(out.out)["result"]["gain"] == 0.0
    code, out = _run(capsys, "asymptotic", "--M", "4", "--L", "1", "--optimize")
    assert json.loads(out.out)["result"]["gamma"] ** 0.5 == pytest.approx(1.51, abs=0.02)


def test_scan_csv_and_doubling(capsys, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["scan", "--M", "6", "--L", "1", "--eps-range", "0:0.004:3", "-o", str(out1)]) == 0
    assert main(["scan", "--M", "6", "--L", "1", "--eps-range", "0:0.004:3", "--double-even",
                 "-o", str(out2)]) == 0
    r1 = out1.read_text().splitlines()
    r2 = out2.read_text().splitlines()
    assert r1[1] == "eps,gamma_star,bracket,gain"
    for a, b in zip(r1[2:], r2[2:]):
        assert float(b.split(",")[3]) == 2 * float(a.split(",")[3])


def test_threshold_both_forms(capsys):
    _, a = _run(capsys, "threshold", "--M", "4", "--L", "1")
    _, b = _run(capsys, "threshold", "--K", "2", "--Theta", "0.7853981633974483")
    assert a.out.splitlines()[2].split(",")[2] == b.out.splitlines()[2].split(",")[2]


def test_simulate_compare(capsys):
    code, out = _run(capsys, "simulate", "--M", "4", "--L", "1", "--mu", "0.1", "--eta", "0.1",
                     "--eps", "0.1", "--pulses", "200000", "--seed", "5", "--compare")
    doc = json.loads(out.out)
    assert code == 0 and doc["compare"]["passed"] and doc["config"]["seed"] == 5


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('M = 4\nL = 1\n[asymptotic]\neps = 0.01\ngamma = 1.0\n')
    _, out = _run(capsys, "asymptotic", "--config", str(cfg))
    assert json.loads(out.out)["config"]["eps"] == 0.01
    _, out = _run(capsys, "asymptotic", "--config", str(cfg), "--eps", "0.0")
    assert json.loads(out.out)["config"]["eps"] == 0.0
    cfg.write_text("bogus = 1\n")
    assert _run(capsys, "asymptotic", "--config", str(cfg), "--M", "4", "--L", "1")[0] == 2


def test_deterministic_output(capsys):
    argv = ["simulate", "--M", "4", "--L", "1", "--mu", "0.1", "--eta", "0.1", "--pulses", "5000"]
    _, a = _run(capsys, *argv)
    _, b = _run(capsys, *argv)
    assert a.out == b.out
