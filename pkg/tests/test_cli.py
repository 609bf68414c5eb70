import json

import pytest

from sccode.experiments.cli import main, sibling
from sccode.experiments.runner import read_result_csv

TINY = """
n_features = 8
dict_atoms = 10
sparsity = 2
n_train = 40
n_test = 20
separation = 0.3
missing_fraction = 0.3
methods = ["simult", "zf", "knn3"]
lam1 = 1.0
lam2 = 0.1
n_iter = 15
n_iter_test = 10
batch_size = 10
n_atoms = 10
repetitions = 2
log_every = 5
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY)
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_compare_is_deterministic_across_workers(tmp_path, cfg_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert run("compare", "--config", cfg_path, "--out", a) == 0
    assert run("compare", "--config", cfg_path, "--out", b) == 0
    assert run("compare", "--config", cfg_path, "--out", c, "--workers", 2) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = read_result_csv(a)
    assert len(rows) == 6 and {r.method for r in rows} == {"simult", "zf", "knn3"}
    assert [r.seed for r in rows if r.method == "zf"] == [0, 1]
    manifest = json.loads(sibling(a, ".manifest.json").read_text())
    assert manifest["seeds"] == [0, 1] and "wall_time_seconds" in manifest
    summary = json.loads(sibling(a, ".summary.json").read_text())
    assert "vs_simult" in summary["cells"][0]["methods"]["zf"]


def test_seed_override_and_json(tmp_path, cfg_path):
    out = tmp_path / "r.json"
    assert run("compare", "--config", cfg_path, "--out", out, "--seed", 5, "--format", "json") == 0
    rows = json.loads(out.read_text())
    assert {r["seed"] for r in rows} == {5, 6}


def test_train_eval_condcheck_round_trip(tmp_path, cfg_path):
    ckpt, trace = tmp_path / "m.ckpt", tmp_path / "trace.csv"
    assert run("train", "--config", cfg_path, "--checkpoint", ckpt, "--out", trace) == 0
    assert trace.read_text().startswith("iteration,J0,J1,J2,mean_nnz")
    pred = tmp_path / "pred.csv"
    assert run("eval", "--config", cfg_path, "--checkpoint", ckpt, "--out", pred) == 0
    lines = pred.read_text().splitlines()
    assert lines[0] == "index,label,prediction" and len(lines) == 21
    acc = json.loads(sibling(pred, ".summary.json").read_text())["test_accuracy"]
    assert 0.0 <= acc <= 1.0
    cond = tmp_path / "cond.csv"
    assert run("condcheck", "--config", cfg_path, "--checkpoint", ckpt, "--out", cond) == 0
    assert len(cond.read_text().splitlines()) == 41


def test_gen_data_and_grid(tmp_path, cfg_path):
    out = tmp_path / "train.csv"
    assert run("gen-data", "--config", cfg_path, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 40
    assert len(sibling(out, ".test.csv").read_text().splitlines()) == 20
    cfg_path.write_text(TINY.replace("repetitions = 2", "grid_lam1 = [0.1, 1.0]\ngrid_lam2 = [0.1]"))
    grid = tmp_path / "grid.csv"
    assert run("grid", "--config", cfg_path, "--out", grid) == 0
    assert len(grid.read_text().splitlines()) == 3
    assert "best_lam1" in json.loads(sibling(grid, ".summary.json").read_text())


def test_usage_errors_exit_2(tmp_path, cfg_path, capsys):
    assert run("compare", "--config", tmp_path / "missing.toml", "--out", tmp_path / "x.csv") == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("lamda1 = 3.0\n")
    assert run("compare", "--config", bad, "--out", tmp_path / "x.csv") == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "usage" and "lamda1" in err["message"]
    assert run("eval", "--config", cfg_path, "--out", tmp_path / "p.csv") == 2
    assert run("compare", "--config", cfg_path, "--out", tmp_path / "no" / "x.csv") == 2
    assert run("compare", "--config", cfg_path, "--out", tmp_path / "x.csv", "--workers", 0) == 2
    assert run("train", "--config", cfg_path, "--checkpoint", tmp_path / "m", "--method", "x") == 2
    with pytest.raises(SystemExit) as exc:
        run("compare", "--out", "x.csv")
    assert exc.value.code == 2


def test_runtime_error_exit_1(tmp_path, cfg_path, capsys):
    garbage = tmp_path / "m.ckpt"
    garbage.write_bytes(b"not a checkpoint")
    assert run("eval", "--config", cfg_path, "--checkpoint", garbage, "--out", tmp_path / "p.csv") == 1
    assert json.loads(capsys.readouterr().err.strip())["error"] == "runtime"
