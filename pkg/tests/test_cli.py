import io
import json
import subprocess
import sys

import pytest

from twedge.cli import build_parser, dispatch


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def parse_kv(text):
    return {k: float(v) for k, v in (line.split("=") for line in text.strip().splitlines())}


def test_edge_identity():
    code, out, _ = run("edge", "--builtin", "identity", "--phi", "1")
    vals = parse_kv(out)
    assert code == 0 and list(vals) == ["c", "lambda_plus", "gamma", "margin"]
    assert vals["c"] == pytest.approx(0.5, abs=1e-12)
    assert vals["lambda_plus"] == pytest.approx(4.0, abs=1e-10)
    assert vals["gamma"] == pytest.approx(0.396850, abs=1e-6)


def test_edge_sigma1():
    code, out, _ = run("edge", "--builtin", "sigma1", "--phi", "1", "--M", "200")
    vals = parse_kv(out)
    assert code == 0
    assert vals["c"] == pytest.approx(0.2878, abs=1e-3)
    assert vals["lambda_plus"] == pytest.approx(6.53, abs=5e-3)


def test_json_before_or_after_subcommand():
    a = json.loads(run("--json", "edge", "--builtin", "identity", "--phi", "4")[1])
    b = json.loads(run("edge", "--builtin", "identity", "--phi", "4", "--json")[1])
    assert a == b and a["lambda_plus"] == pytest.approx(9.0)


@pytest.mark.parametrize("argv", [
    ("edge", "--builtin", "identity", "--phi", "1", "--bogus"),
    ("nosuch",),
    ("table1", "--builtin", "sigma1", "--M", "20", "--N", "20", "--reps", "3"),
    ("edge", "--builtin", "identity"),
    ("simulate", "--builtin", "identity", "--N", "20", "--seed", "1"),
])
def test_usage_errors(argv):
    code, out, err = run(*argv)
    assert code == 2 and out == ""
    assert err.count("\n") == 1 and err.startswith("error: UsageError: ")


def test_missing_seed_message():
    _, _, err = run("table1", "--builtin", "sigma1", "--M", "20", "--N", "20", "--reps", "3")
    assert "--seed" in err


def test_computation_error_exit_1(tmp_path):
    code, _, err = run("test-size", "--builtin", "sigma1", "--M", "30", "--N", "30", "--seed", "1",
                       "--reps", "5", "--cache-dir", str(tmp_path))
    assert code == 1 and err.startswith("error: MissingCalibration: ") and err.count("\n") == 1
    code, _, err = run("edge", "--builtin", "identity", "--phi", "-1")
    assert code == 1 and err.count("\n") == 1


def test_help_lists_every_flag():
    parser = build_parser()
    top = parser.format_help()
    for cmd in ("edge", "simulate", "table1", "test-size", "test-power", "calibrate-tw", "calibrate-onatski",
                "locallaw", "rigidity", "universality"):
        assert cmd in top
    sub = parser._subparsers._group_actions[0].choices
    for name, p in sub.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
    assert run("--help")[0] == 0


def test_edge_json_feeds_simulate(tmp_path):
    code, out, _ = run("--json", "edge", "--builtin", "sigma1", "--M", "30", "--N", "30")
    assert code == 0
    path = tmp_path / "edge.json"
    path.write_text(out)
    common = ("--builtin", "sigma1", "--M", "30", "--N", "30", "--reps", "8", "--seed", "5")
    a = json.loads(run("--json", "simulate", *common, "--edge-from", str(path))[1])
    b = json.loads(run("--json", "simulate", *common)[1])
    assert a["rescaled"] == b["rescaled"] and len(a["rescaled"]) == 8


def test_simulate_csv_and_out_dir(tmp_path):
    code, out, _ = run("simulate", "--builtin", "identity", "--M", "20", "--N", "25", "--reps", "4",
                       "--seed", "2", "--out-dir", str(tmp_path))
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "replicate,lambda1,rescaled" and len(lines) == 5
    assert (tmp_path / "simulate_seed2.csv").read_text() == out


def test_config_file_flags_win(tmp_path):
    conf = tmp_path / "model.cfg"
    conf.write_text("# manifest\nspectrum = sigma1\nM = 30\nN = 30\nradius = d1\nseed = 4\n")
    code, out, _ = run("--json", "table1", "--config", str(conf), "--reps", "5")
    doc = json.loads(out)
    assert code == 0 and doc["config"]["master_seed"] == 4
    assert doc["cells"][0]["setting"] == "sigma1/d1/30x30"
    code, out, _ = run("--json", "table1", "--config", str(conf), "--reps", "5", "--N", "40", "--seed", "9")
    doc = json.loads(out)
    assert doc["cells"][0]["setting"] == "sigma1/d1/30x40" and doc["config"]["master_seed"] == 9


def test_config_spectrum_file(tmp_path):
    (tmp_path / "spec.txt").write_text("1 0.5\n3 0.5\n")
    conf = tmp_path / "model.cfg"
    conf.write_text("spectrum = spec.txt\nM = 20\nN = 20\n")
    code, out, _ = run("table1", "--config", str(conf), "--reps", "3", "--seed", "1")
    assert code == 0 and out.startswith("setting,statistic,estimate,se,reps,seed\n")
    conf.write_text("nonsense = 1\n")
    assert run("table1", "--config", str(conf), "--reps", "3", "--seed", "1")[0] == 2


def test_calibrate_then_size(tmp_path):
    cache = str(tmp_path)
    code, out, _ = run("calibrate-onatski", "--dim", "60", "--reps", "200", "--seed", "3", "--cache-dir", cache)
    assert code == 0 and out.startswith("prob,value\n")
    assert (tmp_path / "onatski_ratio_d60_r200_s3_tridiagonal.json").exists()
    args = ("--builtin", "sigma1", "--radius", "pearson2", "--M", "30", "--N", "30", "--reps", "50",
            "--seed", "1", "--cal-dim", "60", "--cal-reps", "200", "--cal-seed", "3", "--cache-dir", cache)
    code, out, _ = run("--json", "test-size", *args)
    doc = json.loads(out)
    assert code == 0 and 0 <= doc["cells"][0]["estimate"] <= 1
    code, out, _ = run("test-power", *args, "--nu", "0,40")
    rows = out.strip().splitlines()
    assert code == 0 and len(rows) == 3 and "power(nu=40" in rows[2]


def test_calibrate_tw(tmp_path):
    code, out, _ = run("--json", "calibrate-tw", "--dim", "60", "--reps", "150", "--seed", "2",
                       "--cache-dir", str(tmp_path), "--probs", "0.1,0.5,0.9")
    doc = json.loads(out)
    assert code == 0 and [p for p, _ in doc["percentiles"]] == [0.1, 0.5, 0.9]


def test_locallaw_rigidity_universality():
    code, out, _ = run("--json", "locallaw", "--builtin", "identity", "--M", "40", "--N", "40", "--reps", "4",
                       "--seed", "1", "--z-grid", "0:0.1,1:1")
    assert code == 0 and len(json.loads(out)["extras"]["points"]) == 2
    code, out, _ = run("--json", "rigidity", "--builtin", "identity", "--M", "20", "--N", "20", "--reps", "5",
                       "--seed", "1", "--ladder", "20,30,40")
    assert code == 0 and "slope" in json.loads(out)["extras"]
    code, out, _ = run("--json", "universality", "--builtin", "sigma1", "--M", "20", "--N", "20", "--reps", "20",
                       "--seed", "1", "--radius-b", "d2")
    assert code == 0 and 0 <= json.loads(out)["extras"]["ks"] <= 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "twedge", "edge", "--builtin", "identity", "--phi", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "lambda_plus=4.0" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "twedge", "edge", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stderr.count("\n") == 1
