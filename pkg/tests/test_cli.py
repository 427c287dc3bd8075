"""Config schema, deterministic orchestration, artifact layout, exit codes."""

import csv
import json
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from extremalclock.cli import (
    ConfigError,
    ExperimentConfig,
    Table,
    _fmt_cell,
    _run_jobs,
    config_hash,
    load_config,
    run,
    validate_config,
)

TINY = {
    "n_grid": [4],
    "p": 2,
    "c": 0.05,
    "u_grid": [1.0],
    "t_grid": [1.0],
    "s_grid": [1.0],
    "delta_grid": [1.0],
    "replicas": 150,
    "inner_replicas": 40,
    "seed": 7,
}


def test_validate_defaults():
    cfg = validate_config({})
    assert cfg.n_grid == (8, 12, 16)
    assert cfg.p == 2 and cfg.c == 0.05
    assert cfg.replicas == 2000
    assert cfg.beta_for(0) == 1.0


def test_validate_collects_all_problems():
    with pytest.raises(ConfigError) as err:
        validate_config({"bogus": 1, "p": 1, "c": 0.7, "replicas": 0,
                         "n_grid": [], "epsilon": 2.0})
    fields = err.value.fields
    names = {f.split(" ")[0] for f in fields}
    assert {"bogus", "p", "c", "replicas", "n_grid", "epsilon"} <= names
    # message carries every field
    for name in names:
        assert name in str(err.value)


def test_validate_grid_and_seed_rules():
    with pytest.raises(ConfigError):
        validate_config({"n_grid": [8, 3.5]})
    with pytest.raises(ConfigError):
        validate_config({"u_grid": [0.5, -1.0]})
    with pytest.raises(ConfigError):
        validate_config({"seed": -1})
    with pytest.raises(ConfigError):
        validate_config({"seed": 2 ** 64})
    cfg = validate_config({"u_grid": [1, 2.5]})
    assert cfg.u_grid == (1, 2.5)


def test_beta_sequence_rules():
    cfg = validate_config({"n_grid": [8, 12], "beta": [1.0, 0.5]})
    assert cfg.beta == (1.0, 0.5)
    assert cfg.beta_for(1) == 0.5
    with pytest.raises(ConfigError) as err:
        validate_config({"n_grid": [8, 12], "beta": [1.0]})
    assert any(f.startswith("beta") for f in err.value.fields)
    with pytest.raises(ConfigError):
        validate_config({"beta": -1.0})


def test_load_config_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"replicas": 500, "seed": 3}))
    cfg = load_config(str(path))
    assert cfg.replicas == 500 and cfg.seed == 3
    cfg2 = load_config(str(path), overrides={"seed": 9, "threads": 4})
    assert cfg2.seed == 9 and cfg2.threads == 4 and cfg2.replicas == 500
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_config_hash_excludes_operational_fields():
    base = validate_config({"replicas": 100})
    assert config_hash(base) == config_hash(validate_config(
        {"replicas": 100, "seed": 5, "threads": 8, "out": "/elsewhere"}))
    assert config_hash(base) != config_hash(validate_config({"replicas": 101}))


def test_fmt_cell():
    assert _fmt_cell(True) == "true"
    assert _fmt_cell(np.bool_(False)) == "false"
    assert _fmt_cell(0.1) == "0.10000000000000001"
    assert _fmt_cell(np.float64(2.0)) == "2"
    assert _fmt_cell(np.int64(7)) == "7"
    assert _fmt_cell("x") == "x"


def test_table_csv(tmp_path):
    table = Table("demo", ["value", "ok"])
    prov = {"n": 8, "p": 2, "c": 0.05, "beta": 1.0, "seed": 0}
    table.add(prov, value=1.5, ok=True)
    path = table.write_csv(str(tmp_path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "p", "c", "beta", "seed", "value", "ok"]
    assert rows[1] == ["8", "2", "0.050000000000000003", "1", "0", "1.5", "true"]
    with pytest.raises(KeyError):
        table.add(prov, value=2.0)  # missing 'ok'


def test_run_jobs_order_and_thread_invariance():
    def make_job(i):
        def job(rng):
            time.sleep(0.02 * (3 - i) if i < 3 else 0.0)  # early jobs finish last
            return (i, rng.integers(0, 1000, 3).tolist())
        return job

    jobs = [make_job(i) for i in range(6)]
    seq = _run_jobs(jobs, validate_config({"threads": 1, "seed": 11}))
    par = _run_jobs([make_job(i) for i in range(6)],
                    validate_config({"threads": 4, "seed": 11}))
    assert [r[0] for r in seq] == list(range(6))
    assert seq == par  # per-job streams keyed by index, order preserved


def test_run_ehrenfest_writes_artifacts(tmp_path):
    cfg = validate_config({"n_grid": [6], "replicas": 300, "distance_steps": 6,
                           "out": str(tmp_path / "run1"), "seed": 1})
    results = run("ehrenfest", cfg)
    out = tmp_path / "run1"
    assert (out / "results.json").exists()
    assert (out / "manifest.json").exists()
    for name in results["tables"]:
        assert (out / f"{name}.csv").exists()
    payload = json.loads((out / "results.json").read_text())
    assert payload["command"] == "ehrenfest"
    assert payload["config_hash"] == config_hash(cfg)
    assert payload["seed"] == 1
    assert payload["partial"] is False
    assert payload["runtime_seconds"] > 0.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["replicas"] == 300
    assert set(manifest["versions"]) == {"python", "numpy", "scipy", "extremalclock"}
    with pytest.raises(ValueError):
        run("nope", cfg)


def test_run_ppp_reports_ks(tmp_path):
    cfg = validate_config({"replicas": 2000, "t_grid": [0.5, 1.0],
                           "out": str(tmp_path / "ppp"), "seed": 2})
    results = run("ppp", cfg)
    assert [k["t"] for k in results["ks"]] == [0.5, 1.0]
    for entry in results["ks"]:
        assert entry["count"] == 2000
        assert 0.0 <= entry["statistic"] <= 1.0


def test_out_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("EXTREMAL_CLOCK_OUT", str(tmp_path / "envdir"))
    cfg = validate_config({"replicas": 500, "t_grid": [1.0], "seed": 3})
    run("ppp", cfg)
    assert (tmp_path / "envdir" / "ppp" / "results.json").exists()


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "extremalclock", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_error_exit_codes(tmp_path):
    proc = _cli(["ppp", "--config", str(tmp_path / "missing.json")], tmp_path)
    assert proc.returncode == 2
    assert "not found" in proc.stderr

    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    proc = _cli(["ppp", "--config", str(bad)], tmp_path)
    assert proc.returncode == 2
    assert "JSON" in proc.stderr

    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"p": 0, "mystery": 1}))
    proc = _cli(["ppp", "--config", str(schema)], tmp_path)
    assert proc.returncode == 2
    assert "p (" in proc.stderr and "mystery" in proc.stderr


def test_cli_verify_deterministic_across_threads(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(TINY))
    out1 = tmp_path / "t1"
    out2 = tmp_path / "t2"
    p1 = _cli(["verify", "--config", str(cfg_path), "--threads", "1",
               "--out", str(out1)], tmp_path)
    p2 = _cli(["verify", "--config", str(cfg_path), "--threads", "2",
               "--out", str(out2)], tmp_path)
    assert p1.returncode == 0, p1.stderr
    assert p2.returncode == 0, p2.stderr
    r1 = json.loads((out1 / "results.json").read_text())
    r2 = json.loads((out2 / "results.json").read_text())
    r1.pop("runtime_seconds")
    r2.pop("runtime_seconds")
    assert r1 == r2
    assert "wrote" in p1.stdout


def test_cli_seed_changes_results(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({**TINY, "replicas": 100}))
    outs = []
    for seed, name in ((1, "s1"), (2, "s2")):
        out = tmp_path / name
        proc = _cli(["verify", "--config", str(cfg_path), "--seed", str(seed),
                     "--out", str(out)], tmp_path)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads((out / "results.json").read_text())
        payload.pop("runtime_seconds")
        outs.append(payload)
    assert outs[0]["config_hash"] == outs[1]["config_hash"]  # seed not hashed
    assert outs[0] != outs[1]
