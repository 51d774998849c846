import json
import os

import numpy as np
import pytest

from critgraph.cli import main


def run_cli(argv, tmp_path, name):
    out = tmp_path / name
    rc = main(argv + ["--out", str(out)])
    assert rc == 0
    return out.read_bytes()


def test_sample_tree_output(tmp_path):
    raw = run_cli(["sample-tree", "--ecd", "0,0,0,2,2", "--reps", "500",
                   "--seed", "7"], tmp_path, "t.json")
    doc = json.loads(raw)
    assert doc["n_trees"] == 2
    assert sum(doc["frequencies"].values()) == 500
    assert doc["chi_square"]["p"] > 1e-6


def test_sample_tree_csv(tmp_path):
    raw = run_cli(["sample-tree", "--ecd", "0,0,0,2,2", "--reps", "50",
                   "--seed", "7", "--format", "csv"], tmp_path, "t.csv")
    lines = raw.decode().strip().splitlines()
    assert lines[0] == "tree,count"
    assert sum(int(ln.rsplit(",", 1)[1]) for ln in lines[1:]) == 50


def test_enumerate_command(tmp_path):
    deg = tmp_path / "d.json"
    deg.write_text("[1,2,2,2,3]")
    raw = run_cli(["enumerate", "--degrees", str(deg), "--k", "1"],
                  tmp_path, "e.json")
    doc = json.loads(raw)
    assert doc["count_connected"] == 6
    assert doc["identity_holds"] is True


def test_degrees_file_newline_format(tmp_path):
    deg = tmp_path / "d.txt"
    deg.write_text("1\n2\n2\n2\n3\n")
    raw = run_cli(["enumerate", "--degrees", str(deg), "--k", "1"],
                  tmp_path, "e.json")
    assert json.loads(raw)["count_connected"] == 6


def test_wright_command(tmp_path):
    deg = tmp_path / "d.json"
    deg.write_text("[1,1,2,2]")
    raw = run_cli(["wright", "--degrees", str(deg), "--k", "0"],
                  tmp_path, "w.json")
    doc = json.loads(raw)
    assert doc["ratio_float"] == 1.0


def test_sample_connected_and_cm(tmp_path):
    deg = tmp_path / "d.json"
    deg.write_text("[1,2,2,2,3]")
    raw = run_cli(["sample-connected", "--degrees", str(deg), "--k", "1",
                   "--reps", "3", "--seed", "1"], tmp_path, "c.json")
    doc = json.loads(raw)
    assert len(doc["samples"]) == 3
    for s in doc["samples"]:
        assert len(s["edges"]) == 5  # half the degree sum

    raw = run_cli(["sample-cm", "--regular", "6,3", "--reps", "2",
                   "--seed", "1"], tmp_path, "cm.json")
    doc = json.loads(raw)
    assert doc["degree_one_present"] is False
    assert len(doc["samples"][0]["edges"]) == 9


def test_sample_simple_two_atom(tmp_path):
    raw = run_cli(["sample-simple", "--two-atom", "8", "--reps", "2",
                   "--seed", "3"], tmp_path, "s.json")
    doc = json.loads(raw)
    assert doc["degrees"] == [1, 1, 1, 1, 1, 1, 3, 3]
    assert 0 < doc["acceptance_rate"] <= 1


def test_vacant_set_command(tmp_path):
    raw = run_cli(["vacant-set", "--r", "3", "--n", "300", "--reps", "4",
                   "--seed", "5", "--format", "csv"], tmp_path, "v.csv")
    lines = raw.decode().strip().splitlines()
    assert lines[0].startswith("replica,c1,c2,surplus1,pmf0")
    assert len(lines) == 5


def test_limit_sim_command(tmp_path):
    raw = run_cli(["limit-sim", "--construction", "mk", "--k", "1",
                   "--grid", "200", "--samples", "5", "--seed", "2"],
                  tmp_path, "l.json")
    doc = json.loads(raw)
    assert len(doc["samples"]) == 5
    assert len(doc["samples"][0]["sorted_distances"]) == 6
    raw = run_cli(["limit-sim", "--construction", "mvac", "--r", "3",
                   "--grid", "200", "--samples", "2", "--seed", "2"],
                  tmp_path, "l2.json")
    assert len(json.loads(raw)["samples"]) == 2


def test_compare_presets(tmp_path):
    raw = run_cli(["compare", "--preset", "self", "--m", "201", "--reps",
                   "150", "--seed", "4"], tmp_path, "cmp.json")
    assert json.loads(raw)["rejected"] is False
    raw = run_cli(["compare", "--preset", "tree-vs-scaled", "--m", "201",
                   "--reps", "150", "--seed", "4"], tmp_path, "cmp2.json")
    assert json.loads(raw)["rejected"] is True


def test_concentration_command(tmp_path):
    raw = run_cli(["concentration", "--p-spec", "uniform", "--m", "100",
                   "--reps", "50", "--seed", "1"], tmp_path, "q.json")
    doc = json.loads(raw)
    assert doc["quantiles"]["0.99"] < 1e-9


@pytest.mark.parametrize("argv", [
    ["sample-tree", "--ecd", "0,0,0,2,2", "--reps", "200", "--seed", "11"],
    ["vacant-set", "--r", "3", "--n", "200", "--reps", "6", "--seed", "11"],
    ["limit-sim", "--construction", "mk", "--k", "1", "--grid", "150",
     "--samples", "4", "--seed", "11"],
])
def test_determinism_across_runs_and_threads(argv, tmp_path):
    a = run_cli(argv + ["--threads", "1"], tmp_path, "a.out")
    b = run_cli(argv + ["--threads", "1"], tmp_path, "b.out")
    c = run_cli(argv + ["--threads", "4"], tmp_path, "c.out")
    assert a == b == c


def test_env_thread_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITGRAPH_THREADS", "2")
    a = run_cli(["sample-tree", "--ecd", "0,0,2", "--reps", "50",
                 "--seed", "9"], tmp_path, "a.out")
    monkeypatch.delenv("CRITGRAPH_THREADS")
    b = run_cli(["sample-tree", "--ecd", "0,0,2", "--reps", "50",
                 "--seed", "9", "--threads", "1"], tmp_path, "b.out")
    assert a == b
