import json

import pytest

from quasirandom import __version__
from quasirandom.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "family, status, case",
    [("matching", "highly_algebraic", 1), ("starforest", "highly_algebraic", 2), ("pureset", "not_highly_algebraic", None)],
)
def test_analyze(capsys, family, status, case):
    code, out, _ = run(capsys, "analyze", "--family", family)
    rep = json.loads(out)
    assert code == 0
    assert rep["verdict"]["status"] == status and rep["verdict"]["case"] == case
    assert rep["version"] == __version__ and rep["config"]["family"] == family


def test_analyze_marked_text(capsys):
    code, out, _ = run(capsys, "analyze", "--family", "marked", "--F", "0,1", "--format", "text")
    assert code == 0 and out.strip() == "not_highly_algebraic: quasi-random (measure constructible)"


def test_analyze_unknown_exit(capsys, tmp_path):
    spec = tmp_path / "w.json"
    spec.write_text(json.dumps({
        "family": "window",
        "window": {"signature": {"relations": [{"name": "E", "arity": 2}], "functions": []}, "n": 3, "facts": {"E": [[0, 1], [1, 0]]}},
    }))
    code, out, _ = run(capsys, "analyze", "--spec", str(spec), "--cbar-bound", "1", "--search-window", "4")
    assert code == 2 and json.loads(out)["verdict"]["status"] == "unknown"


def test_malformed_spec_exit(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "analyze", "--spec", str(bad))
    assert code == 1 and "error" in json.loads(err)


def test_cocycle(capsys):
    code, out, _ = run(capsys, "cocycle", "--g", "(0 1)", "--cbar", "0,2", "--format", "text")
    assert code == 0 and out.strip() == "1/2"
    code, out, _ = run(capsys, "cocycle", "--g", "(0 1)", "--cbar", "0,2")
    assert json.loads(out)["cocycle"]["ratio"] == "1/2"


def test_bad_permutation(capsys):
    code, _, _ = run(capsys, "cocycle", "--g", "(0 1", "--cbar", "0")
    assert code == 1


def test_acl(capsys):
    code, out, _ = run(capsys, "acl", "--family", "matching", "--abar", "4", "--candidates", "8")
    assert code == 0 and json.loads(out)["acl"]["members"] == [4, 5]
    code, out, _ = run(capsys, "acl", "--family", "matching", "--abar", "0", "--b", "1", "--route", "count")
    assert code == 0 and json.loads(out)["verdict"]["member"] == "yes"


def test_sample_is_byte_identical(capsys):
    _, a, _ = run(capsys, "sample", "--count", "2", "--seed", "7")
    _, b, _ = run(capsys, "sample", "--count", "2", "--seed", "7")
    _, c, _ = run(capsys, "sample", "--count", "2", "--seed", "8")
    assert a == b and a != c
    rep = json.loads(a)
    assert len(rep["samples"]) == 2 and rep["seed"] == 7


def test_sample_er(capsys):
    code, out, _ = run(capsys, "sample", "--family", "er", "--ell", "0", "--count", "3", "--n", "5", "--summary")
    rep = json.loads(out)
    assert code == 0 and "samples" not in rep and rep["count"] == 3


def test_test_quasi(capsys):
    code, out, _ = run(capsys, "test-quasi", "--count", "3000", "--alpha", "0.01", "--n", "6", "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and rep["test"]["pass"]


def test_test_quasi_events_file(capsys, tmp_path):
    ev = tmp_path / "events.json"
    ev.write_text(json.dumps([{"name": "c0=0", "kind": "param", "index": 0, "value": 0, "expected_ratio": "1"}]))
    code, out, _ = run(capsys, "test-quasi", "--count", "3000", "--alpha", "0.01", "--n", "6", "--events", str(ev))
    assert code == 1 and not json.loads(out)["test"]["pass"]


def test_separate_and_verify(capsys, tmp_path):
    tree = tmp_path / "tree.json"
    code, _, _ = run(capsys, "separate", "--family", "matching", "--depth", "2", "--out", str(tree))
    assert code == 0
    code, out, _ = run(capsys, "verify", "--tree", str(tree), "--exhaustive")
    rep = json.loads(out)["verification"]
    assert code == 0 and rep["ok"] and rep["pairs"] == 6
    assert set(rep["exhaustive_overlaps"].values()) == {0}

    data = json.loads(tree.read_text())
    nodes = data["tree"]["nodes"]
    for key in ("1", "10", "11"):
        nodes[key]["gamma"] = list(range(len(nodes[key]["gamma"])))
    tree.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", "--tree", str(tree))
    rep = json.loads(out)["verification"]
    assert code == 1 and rep["failing_pairs"]


def test_separate_with_k_file(capsys, tmp_path):
    k = tmp_path / "k.json"
    k.write_text(json.dumps({"family": "starforest", "forced": {"n": 2, "facts": {"C": [[0]], "R": [[0, 1], [1, 0]]}},
                             "bound_fn": {"slope": 2, "offset": 2}}))
    code, out, _ = run(capsys, "separate", "--family", "starforest", "--k", str(k), "--depth", "1")
    assert code == 0 and json.loads(out)["tree"]["nodes"][""]["data"]["ell2"] == 3
