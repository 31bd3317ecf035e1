import json
import subprocess
import sys

import numpy as np
import pytest
import scipy.io

from weakreg import Graph, HomogeneousPoly, cut_norm_exact, Kernel
from weakreg.cli import main


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(0)
    sign = rng.choice([-1.0, 1.0], size=(12, 12))
    sign[:9, :9] = 1.0
    scipy.io.mmwrite(tmp_path / "k.mtx", sign)
    g = Graph.gnp(32, 0.5, 1)
    with open(tmp_path / "g.tsv", "w") as fh:
        for u in range(32):
            for v in range(u + 1, 32):
                if g.adjacency[u, v]:
                    fh.write(f"{u}\t{v}\n")
    p = HomogeneousPoly.random(3, 2, rng)
    (tmp_path / "p.json").write_text(json.dumps(p.to_dict()))
    (tmp_path / "part.json").write_text(json.dumps({"blocks": [list(range(6)), list(range(6, 10))]}))
    return tmp_path


def run_cli(args, out):
    code = main(args + ["--output", str(out)])
    return code, json.loads(out.read_text())


def strip_timings(text):
    d = json.loads(text)
    d.pop("timings", None)
    return d


def test_decompose_bound(files):
    code, rep = run_cli(["decompose", "-i", str(files / "k.mtx"), "--k", "9"], files / "d.json")
    assert code == 0 and rep["status"] == "ok" and rep["proved"]
    cert = rep["results"]["certificate"]
    assert cert["final_cut_bound"] <= 1 / 3
    residual = Kernel(np.array(cert["residual"]), cert["scale"])
    assert cut_norm_exact(residual)[0] <= 1 / 3 + 1e-12
    assert len(rep["input_digest"]) == 64


def test_verify_tampered(files):
    run_cli(["decompose", "-i", str(files / "k.mtx"), "--k", "9"], files / "d.json")
    code, rep = run_cli(["verify", "-i", str(files / "k.mtx"), "--certificate", str(files / "d.json")], files / "v.json")
    assert code == 0
    d = json.loads((files / "d.json").read_text())
    d["results"]["certificate"]["terms"][0]["coeff"] += 0.01
    (files / "bad.json").write_text(json.dumps(d))
    code, rep = run_cli(["verify", "-i", str(files / "k.mtx"), "--certificate", str(files / "bad.json")],
                        files / "v.json")
    assert code == 1 and rep["status"] == "failed"
    assert "residual" in rep["results"]["verification"]["failed"]


def test_selftest(files):
    code, rep = run_cli(["selftest"], files / "s.json")
    assert code == 0 and rep["results"]["passed"]


@pytest.mark.parametrize("args", [
    ["cutnorm", "-i", "k.mtx"],
    ["partition", "-i", "part.json"],
    ["szemeredi", "-i", "g.tsv"],
    ["interval", "-i", "g.tsv"],
    ["poly-concentrate", "-i", "p.json", "--k", "3"],
])
def test_commands_succeed(files, args):
    args = [str(files / a) if a.endswith((".mtx", ".json", ".tsv")) else a for a in args]
    code, rep = run_cli(args, files / "out.json")
    assert code == 0, rep
    assert rep["exact"] and rep["proved"]


def test_partition_from_nodes(files):
    code, rep = run_cli(["partition", "--nodes", "10", "--epsilon", "0.3"], files / "o.json")
    assert code == 0 and rep["results"]["refined"]["blocks"][0] == [0, 1, 2]


def test_heuristic_never_proved(files):
    code, rep = run_cli(["cutnorm", "-i", str(files / "k.mtx"), "--mode", "heuristic"], files / "o.json")
    assert code == 0 and not rep["exact"] and not rep["proved"]
    assert rep["results"]["is_lower_bound"]


@pytest.mark.parametrize("args", [
    ["cutnorm"],
    ["cutnorm", "-i", "missing.mtx"],
    ["cutnorm", "-i", "g.unknown"],
    ["szemeredi", "-i", "g.tsv", "--epsilon", "1.5"],
    ["verify", "-i", "k.mtx"],
])
def test_usage_errors(files, args):
    (files / "g.unknown").write_text("x")
    args = [str(files / a) if "." in a and not a.startswith("-") and a != "1.5" else a for a in args]
    code, rep = run_cli(args, files / "e.json")
    assert code == 2
    assert rep["status"] == "error" and rep["error"]["message"]


def test_malformed_edge_list(files):
    (files / "bad.tsv").write_text("0\t1\n2\n")
    code, rep = run_cli(["szemeredi", "-i", str(files / "bad.tsv")], files / "e.json")
    assert code == 2 and rep["error"]["type"] == "FormatError"


def test_config_precedence(files):
    (files / "cfg.json").write_text(json.dumps({"k": 4, "seed": 5}))
    code, rep = run_cli(["decompose", "-i", str(files / "k.mtx"), "--config", str(files / "cfg.json"), "--k", "16"],
                        files / "o.json")
    assert rep["config"]["k"] == 16 and rep["config"]["seed"] == 5
    (files / "bad_cfg.json").write_text(json.dumps({"nope": 1}))
    code, rep = run_cli(["selftest", "--config", str(files / "bad_cfg.json")], files / "o.json")
    assert code == 2


def test_normalize_flag(files):
    scipy.io.mmwrite(files / "big.mtx", 3 * np.ones((4, 4)))
    code, rep = run_cli(["decompose", "-i", str(files / "big.mtx")], files / "o.json")
    assert code == 2 and "rescale" in rep["error"]["message"]
    code, rep = run_cli(["decompose", "-i", str(files / "big.mtx"), "--normalize"], files / "o.json")
    assert code == 0 and rep["results"]["rescale_factor"] == pytest.approx(1 / 3)


def test_determinism_and_stdout(files):
    args = ["szemeredi", "-i", str(files / "g.tsv"), "--seed", "3"]
    outs = [subprocess.run([sys.executable, "-m", "weakreg.cli", *args], capture_output=True, text=True, check=True).stdout
            for _ in range(2)]
    assert strip_timings(outs[0]) == strip_timings(outs[1])
