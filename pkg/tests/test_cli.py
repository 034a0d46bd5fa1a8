import json
import os
import subprocess
import sys

import pytest

from lvcd.cli import main


def run_cli(args):
    return main(args)


def test_simulate_discover_eval_flow(tmp_path):
    data = os.path.join(tmp_path, "d.csv")
    model_file = os.path.join(tmp_path, "m.json")
    result = os.path.join(tmp_path, "r.json")
    assert run_cli(["simulate", "--model", "c", "--n", "800", "--seed", "3",
                    "--coef-seed", "5", "--out", data,
                    "--model-out", model_file]) == 0
    assert run_cli(["discover", data, "--seed", "7", "--out", result]) == 0
    payload = json.load(open(result))
    assert set(payload) == {"clusters", "latent_edges", "latent_ancestry",
                            "observed_ancestry", "diagnostics", "config"}
    assert run_cli(["eval", result, "--truth", model_file]) == 0


def test_discover_byte_identical(tmp_path):
    data = os.path.join(tmp_path, "d.csv")
    run_cli(["simulate", "--model", "a", "--n", "600", "--seed", "1",
             "--out", data])
    out1 = os.path.join(tmp_path, "r1.json")
    out2 = os.path.join(tmp_path, "r2.json")
    run_cli(["discover", data, "--seed", "5", "--out", out1])
    run_cli(["discover", data, "--seed", "5", "--out", out2])
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_input_error_exit_code(tmp_path):
    missing = os.path.join(tmp_path, "nope.csv")
    assert run_cli(["discover", missing, "--out", os.path.join(tmp_path, "r.json")]) == 1


def test_benchmark_cli(tmp_path):
    report = os.path.join(tmp_path, "rep.csv")
    assert run_cli(["benchmark", "--models", "a", "--ns", "400", "--reps", "1",
                    "--seed", "2", "--out", report]) == 0
    lines = open(report).read().splitlines()
    assert lines[0].startswith("model,n,reps")
    assert len(lines) == 2


def test_unknown_model_rejected(tmp_path):
    assert run_cli(["benchmark", "--models", "zz", "--ns", "400",
                    "--reps", "1"]) == 1


def test_console_entry_point(tmp_path):
    data = os.path.join(tmp_path, "d.csv")
    proc = subprocess.run(
        [sys.executable, "-m", "lvcd.cli", "simulate", "--model", "a",
         "--n", "100", "--seed", "0", "--out", data],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(data)
