import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cigsel import io
from cigsel.cli import main
from cigsel.process import ProcessSpec, sample


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"kind": "matched-pair", "p": 4, "pairs": [[0, 1]], "kappa": [0.9]}))
    return path


def test_gen_writes_reproducible_csv(tmp_path, spec_file):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gen", "--spec", str(spec_file), "--n", "32", "--seed", "5", "--out", str(out1)]) == 0
    assert main(["gen", "--spec", str(spec_file), "--n", "32", "--seed", "5", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    X = io.read_samples(out1)
    assert (X.p, X.N) == (4, 32)
    ref = sample(ProcessSpec.from_json(json.loads(spec_file.read_text())), 32, 5)
    assert np.array_equal(X.values, ref.values)


def test_gen_then_select(tmp_path):
    spec_file = tmp_path / "pair.json"
    spec_file.write_text(json.dumps({"kind": "matched-pair", "p": 2, "pairs": [[0, 1]], "kappa": [0.9]}))
    samples, graph = tmp_path / "x.csv", tmp_path / "g.json"
    main(["gen", "--spec", str(spec_file), "--n", "4096", "--seed", "1", "--out", str(samples)])
    b = ProcessSpec.from_json(json.loads(spec_file.read_text())).b_actual
    rc = main(["select", "--in", str(samples), "--rho-min", "0.9", "--b", repr(b), "--out", str(graph)])
    assert rc == 0
    obj = json.loads(graph.read_text())
    assert obj["p"] == 2 and obj["edges"] == [[0, 1]]
    assert len(obj["per_node"]) == 2


def test_select_to_stdout(tmp_path, capsys):
    X = np.zeros((2, 5))
    X[0] = X[1] = [1.0, -1.0, 2.0, 0.5, 0.0]
    from cigsel.model import SampleBlock

    path = tmp_path / "x.csv"
    io.write_samples(path, SampleBlock(X))
    assert main(["select", "--in", str(path), "--rho-min", "0.5", "--b", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["edges"] == [[0, 1]]


def test_bounds_prints_report(capsys):
    assert main(["bounds", "--p", "10", "--rho-min", "0.25", "--b", "3", "--delta", "0.05"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["input"] == {"p": 10, "rho_min": 0.25, "b": 3.0, "delta": 0.05, "n": 1}
    assert obj["necessary_N"] == pytest.approx(11.2267, abs=1e-3)
    assert obj["graph_entropy_bits"] == pytest.approx(math.log2(45))


def test_sweep_to_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p_list": [4], "N_list": [32], "kappa_list": [0.25], "trials": 5, "master_seed": 2}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 2


def test_verify_fast_passes(capsys):
    assert main(["verify", "--level", "fast"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "checks passed" in out


def test_verify_detects_printed_ensemble_constant(capsys):
    assert main(["verify", "--level", "fast", "--ensemble-constant", "printed"]) == 1
    assert "[FAIL] ensemble-validity" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--spec", "/nonexistent.json", "--n", "4", "--seed", "0", "--out", "/tmp/x.csv"],
        ["bounds", "--p", "1", "--rho-min", "0.25"],
        ["bounds", "--p", "10", "--rho-min", "1.5"],
    ],
)
def test_configuration_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "cigsel: error:" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p_list": [4], "N_list": [4], "kappa_list": [0.5], "trials": 1,
                               "master_seed": 0, "filter": {"K": 8}}))
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_bad_samples_exit_2(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("3,2\n1,2,3\n")
    assert main(["select", "--in", str(path), "--rho-min", "0.5", "--b", "3"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cigsel", "bounds", "--p", "3", "--rho-min", "0.25"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["mi_upper"] == pytest.approx(0.113659, abs=1e-6)
