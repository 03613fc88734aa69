import csv
import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from polyatest.cli import main, read_csv, write_csv
from polyatest.simgen import MenuConfig, draw_round


def _schema(name):
    return json.loads(resources.files("polyatest").joinpath(f"schemas/{name}.schema.json").read_text())


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_two_sample_fixture(tmp_path, capsys):
    path = _write(tmp_path / "d.csv", ["c", "x"],
                  zip([0, 0, 0, 0, 1, 1, 1, 1], [-2, -1.5, -1, -0.5, 0.5, 1, 1.5, 2]))
    code, out, _ = _run(capsys, "test", path, "--roles", "c,x")
    assert code == 0
    result = json.loads(out)
    assert result["log_bf01"] == pytest.approx(math.log(5 / 126), abs=1e-12)
    jsonschema.validate(result, _schema("test_result"))


def test_roles_and_dispatch(tmp_path, capsys):
    rng = np.random.default_rng(0)
    rows = np.column_stack([rng.integers(0, 2, 60), rng.standard_normal((60, 2))])
    path = _write(tmp_path / "d.csv", ["grp", "a", "b"], rows.tolist())
    expected = {"c=grp,x=a": "two_sample", "x=a,y=b": "independence", "c=grp,x=b,z=a": "cond_two_sample",
                "c,x": "two_sample"}
    for roles, kind in expected.items():
        code, out, _ = _run(capsys, "test", path, "--roles", roles)
        assert code == 0 and json.loads(out)["test"] == kind


def test_n2_gives_zero(tmp_path, capsys):
    path = _write(tmp_path / "d.csv", ["c", "x"], [[0, 0.3], [1, 1.7]])
    code, out, _ = _run(capsys, "test", path)
    assert code == 0 and json.loads(out)["log_bf01"] == 0.0


@pytest.mark.parametrize("content,args", [
    ("c,x\n0,1\n1,2\n", ["--roles", "c=c,x=missing"]),
    ("c,x\n0,1\n1,abc\n", []),
    ("c,x\n0,1\n1\n", []),
    ("", []),
    ("c,x\n0,1\n2,2\n1,3\n", []),
    ("c,x\n0,1\n1,2\n", ["--alpha-rule", "poly:-1"]),
    ("c,x\n0,1\n1,2\n", ["--roles", "q,x"]),
])
def test_malformed_input_exit_2(tmp_path, capsys, content, args):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _, err = _run(capsys, "test", path, *args)
    assert code == 2
    payload = json.loads(err)
    assert payload["exit_code"] == 2
    jsonschema.validate(payload, _schema("error"))


def test_degenerate_exit_3(tmp_path, capsys):
    path = _write(tmp_path / "d.csv", ["c", "x"], [[0, 1.0], [1, 1.0], [0, 1.0]])
    code, _, err = _run(capsys, "test", path)
    assert code == 3 and json.loads(err)["error"] == "DegenerateSample"
    path = _write(tmp_path / "e.csv", ["c", "x"], [[0, 1.0], [0, 2.0], [0, 3.0]])
    assert _run(capsys, "test", path)[0] == 3
    assert _run(capsys, "test", tmp_path / "nope.csv")[0] == 2


def test_lcd_command(tmp_path, capsys):
    r = draw_round(400, 0, MenuConfig("chain", "mean_shift", ("linear",), 4))
    path = _write(tmp_path / "d.csv", ["C", "X", "Y"], zip(r.c, r.x, r.y))
    code, out, _ = _run(capsys, "lcd", path, "--context", "C")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["triples"]) == 2
    assert payload["graph"]["edges"] == [["X", "Y", "strong"]]
    jsonschema.validate(payload, _schema("lcd_output"))
    code, _, _ = _run(capsys, "lcd", path, "--context", "C", "--out", tmp_path / "out")
    assert code == 0
    assert '"X" -> "Y" [color=black, tier="strong"];' in (tmp_path / "out" / "graph.dot").read_text()
    saved = json.loads((tmp_path / "out" / "triples.json").read_text())
    assert saved["triples"] == payload["triples"]


def test_lcd_constant_column_skipped(tmp_path, capsys):
    rng = np.random.default_rng(1)
    path = _write(tmp_path / "d.csv", ["C", "X", "Y"],
                  zip(rng.integers(0, 2, 30), np.ones(30), rng.standard_normal(30)))
    code, out, _ = _run(capsys, "lcd", path, "--context", "C")
    assert code == 0
    assert all(t["skipped"] for t in json.loads(out)["triples"])


def test_simulate_eval_deterministic(tmp_path, capsys):
    for tag, workers in (("a", 1), ("b", 2)):
        assert _run(capsys, "simulate", "--n", 60, "--rounds", 30, "--seed", 2,
                    "--workers", workers, "--out", tmp_path / f"sim_{tag}")[0] == 0
        assert _run(capsys, "eval", tmp_path / f"sim_{tag}", "--workers", workers,
                    "--out", tmp_path / f"eval_{tag}")[0] == 0
    for name in ["manifest.json", "round_00000.csv", "round_00029.json"]:
        assert (tmp_path / "sim_a" / name).read_bytes() == (tmp_path / "sim_b" / name).read_bytes()
    for name in ["scores.csv", "auc.csv", "auc.json", "roc_lcd.csv", "roc_cx.csv"]:
        assert (tmp_path / "eval_a" / name).read_bytes() == (tmp_path / "eval_b" / name).read_bytes()
    jsonschema.validate(json.loads((tmp_path / "sim_a" / "manifest.json").read_text()), _schema("manifest"))
    jsonschema.validate(json.loads((tmp_path / "sim_a" / "round_00003.json").read_text()), _schema("round_metadata"))
    jsonschema.validate(json.loads((tmp_path / "eval_a" / "auc.json").read_text()), _schema("auc_summary"))
    header, cols = read_csv(tmp_path / "eval_a" / "roc_xy.csv")
    assert header == ["alpha", "fpr", "tpr"]
    assert np.all(np.diff(cols["alpha"]) > 0)
    with open(tmp_path / "eval_a" / "auc.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["test_case", "n", "rounds", "auc", "median"]
    assert [r[0] for r in rows[1:]] == ["cx", "xy", "cy_given_x", "lcd"]


def test_eval_missing_dir(tmp_path, capsys):
    assert _run(capsys, "eval", tmp_path / "none", "--out", tmp_path / "o")[0] == 2
    assert _run(capsys, "simulate", "--rounds", 1)[0] == 2
    assert _run(capsys, "simulate", "--scm", "fork", "--out", tmp_path / "s")[0] == 2


def test_sensitivity_command(tmp_path, capsys):
    code, out, _ = _run(capsys, "sensitivity", "--rules", "poly:1,exp:2", "--n", 60, "--rounds", 30,
                        "--seed", 2)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "rule,test_case,n,rounds,auc"
    assert len(lines) == 9 and lines[1].startswith("poly:1,cx,60,")
    assert _run(capsys, "sensitivity", "--rules", "cubic:1", "--rounds", 2)[0] == 2


def test_env_override(tmp_path, capsys, monkeypatch):
    path = _write(tmp_path / "d.csv", ["c", "x"],
                  zip([0, 0, 0, 0, 1, 1, 1, 1], [-2, -1.5, -1, -0.5, 0.5, 1, 1.1, 2]))
    base = json.loads(_run(capsys, "test", path)[1])["log_bf01"]
    monkeypatch.setenv("POLYATEST_ALPHA_RULE", "exp:8")
    changed = json.loads(_run(capsys, "test", path)[1])["log_bf01"]
    assert changed != base
    # a flag wins over the environment
    assert json.loads(_run(capsys, "test", path, "--alpha-rule", "poly:1")[1])["log_bf01"] == base


def test_merge_two_files(tmp_path, capsys):
    a = _write(tmp_path / "ctrl.csv", ["p", "q"], [[1, 2], [3, 4]])
    b = _write(tmp_path / "drug.csv", ["p", "q"], [[5, 6], [7, 8]])
    out = tmp_path / "m.csv"
    assert _run(capsys, "merge-contexts", a, b, "--out", out)[0] == 0
    header, cols = read_csv(out)
    assert header == ["p", "q", "C_ctrl", "C_drug"]
    assert list(cols["C_ctrl"] + cols["C_drug"]) == [1, 1, 1, 1]
    assert list(cols["C_ctrl"]) == [1, 1, 0, 0]
    assert _run(capsys, "merge-contexts", a, b, "--log", "--out", out)[0] == 0
    _, cols = read_csv(out)
    assert cols["p"][0] == 0.0 and cols["q"][3] == pytest.approx(math.log(8))


def test_merge_errors(tmp_path, capsys):
    a = _write(tmp_path / "a.csv", ["p", "q"], [[1, 2]])
    b = _write(tmp_path / "b.csv", ["p", "r"], [[1, 2]])
    z = _write(tmp_path / "z.csv", ["p", "q"], [[0, 2]])
    assert _run(capsys, "merge-contexts", a, b)[0] == 2
    assert _run(capsys, "merge-contexts", a, z, "--log")[0] == 3
    assert _run(capsys, "merge-contexts", a, z)[0] == 0


def test_merge_eight_conditions(tmp_path, capsys):
    sizes = [853, 911, 723, 810, 799, 848, 913, 707]
    rng = np.random.default_rng(3)
    paths = [_write(tmp_path / f"cond{k}.csv", ["raf", "mek", "erk"], rng.lognormal(size=(m, 3)).tolist())
             for k, m in enumerate(sizes)]
    out = tmp_path / "merged.csv"
    assert _run(capsys, "merge-contexts", *paths, "--log", "--out", out)[0] == 0
    header, cols = read_csv(out)
    indicators = [h for h in header if h.startswith("C_")]
    assert len(indicators) == 8 and cols["raf"].size == 6564
    onehot = np.column_stack([cols[h] for h in indicators])
    assert np.all(onehot.sum(axis=1) == 1)
    assert list(onehot.sum(axis=0)) == sizes


def test_csv_round_trip(tmp_path):
    rows = [[0.1, 1e-300, -2.5], [1 / 3, 7.0, 123456789.123]]
    write_csv(tmp_path / "r.csv", ["a", "b", "c"], rows)
    assert (tmp_path / "r.csv").read_bytes().count(b"\r\n") == 3
    header, cols = read_csv(tmp_path / "r.csv")
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(np.column_stack([cols[h] for h in header]), rows)


def test_module_entry_point(tmp_path):
    path = _write(tmp_path / "d.csv", ["c", "x"], [[0, 0.3], [1, 1.7]])
    proc = subprocess.run([sys.executable, "-m", "polyatest", "test", path], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["log_bf01"] == 0.0
