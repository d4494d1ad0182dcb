import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from relipop.cli import build_parser, config_from_args, main, run
from relipop.graph import bidirect, is_connected, is_root_connected, load_graph

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def invoke(*argv):
    args = build_parser().parse_args([str(a) for a in argv])
    cfg = config_from_args(args)
    out, err = io.StringIO(), io.StringIO()
    code = run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


GOLDEN_CASES = {
    "exact_k3.json": ["exact", DATA / "k3.txt", "--json"],
    "exact_pair.json": ["exact", DATA / "pair.txt", "--json"],
    "sample_reach_k3.jsonl": ["sample-reach", DATA / "k3.txt", "--samples", 5, "--seed", 7, "--json"],
    "sample_connected_k4.jsonl": ["sample-connected", DATA / "k4.txt", "--samples", 5, "--seed", 7, "--json"],
    "estimate_c4.json": ["estimate", DATA / "c4.txt", "--eps", 0.2, "--delta", 0.25, "--seed", 7, "--json"],
    "count_size_k4.json": [
        "count-size", DATA / "k4.txt", "--t", 4, "--eps", 0.2, "--seed", 7, "--samples-per-level", 2000, "--json",
    ],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_output(name):
    code, out, _ = invoke(*GOLDEN_CASES[name])
    assert code == 0
    assert out == (GOLDEN / name).read_text()


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_byte_identical_across_runs_and_threads(name):
    argv = GOLDEN_CASES[name]
    first = invoke(*argv)[1]
    assert invoke(*argv)[1] == first
    if name != "exact_k3.json" and name != "exact_pair.json":
        assert invoke(*argv, "--threads", 4)[1] == first


def test_golden_samples_are_valid():
    h = bidirect(load_graph(DATA / "k3.txt"), 0)
    lines = (GOLDEN / "sample_reach_k3.jsonl").read_text().splitlines()
    for line in lines[:-1]:
        assert is_root_connected(h, set(json.loads(line)["ids"]))
    g = load_graph(DATA / "k4.txt")
    lines = (GOLDEN / "sample_connected_k4.jsonl").read_text().splitlines()
    for line in lines[:-1]:
        assert is_connected(g, set(json.loads(line)["ids"]))
    assert json.loads(lines[-1])["stats"]["samples"] == 5


def test_estimate_k3_example():
    code, out, _ = invoke("estimate", DATA / "k3.txt", "--eps", 0.1, "--delta", 0.05, "--seed", 7, "--json")
    assert code == 0
    assert abs(json.loads(out)["estimate"] - 0.5) / 0.5 < 0.1


def test_count_size_k4_example():
    code, out, _ = invoke("count-size", DATA / "k4.txt", "--t", 4, "--eps", 0.2, "--seed", 7,
                          "--samples-per-level", 3000, "--json")
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["estimate"] - 15) / 15 < 0.2 and rep["t"] == 4


def test_count_size_exact_path():
    code, out, _ = invoke("count-size", DATA / "k4.txt", "--t", 3, "--eps", 0.2, "--json")
    assert code == 0 and json.loads(out)["estimate"] == 16


def test_high_p_estimate():
    code, out, _ = invoke("estimate", DATA / "k3_highp.txt", "--eps", 0.1, "--delta", 0.05, "--high-p", "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["method"] == "high-p"
    exact = 3 * 0.05**2 * 0.95 + 0.05**3  # three spanning trees plus the triangle
    assert abs(rep["estimate"] - exact) / exact < 0.1


def test_plain_sample_output():
    code, out, _ = invoke("sample-reach", DATA / "pair.txt", "--samples", 3, "--seed", 1)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert lines[-1].startswith("# samples=3 seed=1")
    assert all("0" in line.split() for line in lines[:3])  # the arc 1 -> 0 is always kept


def test_exact_too_large():
    code, out, err = invoke("exact", DATA / "huge.txt")
    assert code == 2 and out == ""
    assert "instance too large" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["exact", DATA / "missing.txt"],
        ["estimate", DATA / "k3.txt", "--eps", 1.5],
        ["estimate", DATA / "k3.txt", "--eps", 0.1, "--delta", 0],
        ["sample-connected", DATA / "dipath.txt", "--samples", 1],
        ["count-size", DATA / "k4.txt", "--t", 9, "--eps", 0.2],
        ["estimate", DATA / "dipath.txt", "--eps", 0.1],
    ],
    ids=["missing", "eps", "delta", "directed", "t-range", "one-way"],
)
def test_input_errors_exit_2(argv):
    code, out, err = invoke(*argv)
    assert code == 2
    assert err.startswith("relipop: error:")


def test_format_error_reports_position(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("undirected 2 1\ne 0 x 0.5\n")
    code, _, err = invoke("exact", bad)
    assert code == 2 and "line 2" in err and "column" in err


def test_ladder_failure_exit_3():
    code, out, _ = invoke("count-size", DATA / "k4.txt", "--t", 4, "--eps", 0.2, "--samples-per-level", 1, "--seed", 1)
    report = json.loads(out)
    assert code == 3
    assert report["status"] == "failure" and report["branch"] == "ladder"
    assert report["failed_runs"] == report["runs"] == 1


def test_round_cap_exit_3():
    code, out, _ = invoke("sample-reach", DATA / "k3_highp.txt", "--samples", 50, "--round-cap", 1, "--seed", 2)
    assert code == 3 and json.loads(out)["status"] == "failure"


def test_random_seed_is_recorded():
    code, out, _ = invoke("sample-reach", DATA / "pair.txt", "--samples", 1, "--seed", "random", "--json")
    assert code == 0
    assert isinstance(json.loads(out.splitlines()[-1])["stats"]["seed"], int)


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("RELIPOP_THREADS", "2")
    args = build_parser().parse_args(["sample-reach", str(DATA / "pair.txt"), "--samples", "1"])
    assert config_from_args(args).threads == 2


def test_main_returns_code(capsys):
    assert main(["exact", str(DATA / "k3.txt"), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["z_rel"] == pytest.approx(0.5)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "relipop.cli", "exact", str(DATA / "huge.txt")], capture_output=True, text=True
    )
    assert proc.returncode == 2 and "instance too large" in proc.stderr


def test_allow_boundary(tmp_path):
    f = tmp_path / "boundary.txt"
    f.write_text("undirected 3 3\ne 0 1 0\ne 1 2 1\ne 0 2 0.5\n")
    assert invoke("exact", f)[0] == 2
    code, out, _ = invoke("exact", f, "--allow-boundary", "--json")
    assert code == 0
    # the p=1 edge is dropped; the p=0 edge always survives, so only {0,2} decides
    assert json.loads(out)["z_rel"] == pytest.approx(0.5)
    code, out, _ = invoke("sample-connected", f, "--allow-boundary", "--samples", 50, "--json")
    assert code == 0
    assert all(0 in json.loads(line)["ids"] for line in out.splitlines()[:-1])
