import json
import math
import os

import pytest

from dpnls.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main, read_config, InputError
from dpnls.parallel import pmap, resolve_jobs


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    return main([*args, "--output-dir", str(out)]), out


def test_constants(tmp_path, capsys):
    code, out = run(tmp_path, "constants", "--d", "3", "--p0", "4", "--p1", "2")
    assert code == EXIT_OK
    man = json.loads((out / "manifest.json").read_text())
    assert abs(man["derived"]["tilde_ratio"] - 4 / (3 * math.sqrt(3))) < 1e-12
    assert set(man) >= {"params", "derived", "versions", "seed", "config", "files"}
    assert "constants.csv" in man["files"]
    code, _ = run(tmp_path, "constants", "--d", "3", "--p0", "2", "--p1", "4", name="bad")
    assert code == EXIT_INPUT
    code, _ = run(tmp_path, "constants", "--d", "3", "--p0", "4", "--p1", "1", name="inadm")
    assert code == EXIT_INPUT


def test_bad_input(tmp_path):
    assert main(["nonsense"]) == EXIT_INPUT
    assert run(tmp_path, "constants", "--seed", "-1")[0] == EXIT_INPUT
    assert run(tmp_path, "constants", "--d", "x")[0] == EXIT_INPUT
    assert run(tmp_path, "groundstate")[0] == EXIT_INPUT


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# triple\nd = 1\np0 = 6\np1 = 5\nseed = 7\n")
    assert read_config(cfg)["p0"] == 6.0
    code, out = run(tmp_path, "constants", "--config", str(cfg), "--seed", "9")
    man = json.loads((out / "manifest.json").read_text())
    assert man["params"]["d"] == 1 and man["seed"] == 9
    (tmp_path / "bad.cfg").write_text("colour = red\n")
    with pytest.raises(InputError):
        read_config(tmp_path / "bad.cfg")


def test_groundstate_and_expect_none(tmp_path):
    code, out = run(tmp_path, "groundstate", "--omega", "0.05")
    assert code == EXIT_OK and (out / "groundstate.fld").exists()
    assert run(tmp_path, "groundstate", "--omega", "1.01omega_star", "--expect-none", name="n")[0] == EXIT_OK
    assert run(tmp_path, "groundstate", "--omega", "1.01omega_star", name="m")[0] == EXIT_NUMERICAL


def test_check_passes(tmp_path):
    code, out = run(tmp_path, "check", "--d", "1", "--p0", "6", "--p1", "5", "--n-random", "20")
    assert code == EXIT_OK
    assert "check.csv" in json.loads((out / "manifest.json").read_text())["files"]


def test_reproducible_mass_curve(tmp_path):
    a = run(tmp_path, "groundstate", "--mass-curve", "6", "--jobs", "1", name="a")[1]
    b = run(tmp_path, "groundstate", "--mass-curve", "6", "--jobs", "3", name="b")[1]
    assert (a / "mass_curve.csv").read_bytes() == (b / "mass_curve.csv").read_bytes()


def test_resolve_jobs(monkeypatch):
    monkeypatch.delenv("DPNLS_JOBS", raising=False)
    assert resolve_jobs(3) == 3
    monkeypatch.setenv("DPNLS_JOBS", "2")
    assert resolve_jobs(5) == 2


def _square(x):
    return x * x


def test_pmap_keeps_order():
    assert pmap(_square, range(10), 3) == [x * x for x in range(10)]
