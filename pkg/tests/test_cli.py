import copy
import csv
import hashlib
import json
import math
from pathlib import Path

import pytest

from boundary_weyl import cli
from boundary_weyl.cli import main
from boundary_weyl.config import ConfigError, parse_config
from boundary_weyl.spectral import zonal_ratio_limit

BASE = {
    "schema_version": 1,
    "domain": {"kind": "annulus", "r_inner": 1.0, "r_outer": 2.0},
    "bc": "neumann",
    "lambda_max": 40.0,
    "boundary_grid": 1024,
    "rim_points": [[0, 0.0], [1, 0.0]],
    "kernel": {"T": 4.0, "shape": "fejer_bump"},
    "filter": {"eps": 0.1, "eps_list": [0.05, 0.1, 0.2]},
    "billiard": {"T": 4.5, "N": 2000, "delta": 0.01, "seed": 7},
    "wave": {"sigma": 0.12, "t_max": 2.5, "dt": 0.01},
    "output_dir": "unused",
}


def make(tmp_path, name="cfg", **over):
    d = copy.deepcopy(BASE)
    for k, v in over.items():
        d[k] = v
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(d))
    return path


def run(tmp_path, sub, cfg, out, *extra, cache=None):
    argv = [sub, "--config", str(cfg), "--out", str(tmp_path / out)]
    return main(argv + list(extra))


def read_csv(path):
    rows = list(csv.reader(open(path)))
    return rows[0], rows[1:]


# -- validation


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.pop("bc"), "bc"),
        (lambda d: d.update(bc="robin"), "bc"),
        (lambda d: d["billiard"].pop("seed"), "billiard.seed"),
        (lambda d: d["billiard"].update(N=10), "billiard.N"),
        (lambda d: d["filter"].update(eps=0.7), "filter.eps"),
        (lambda d: d.update(lambda_max=-1), "lambda_max"),
        (lambda d: d.update(boundary_grid=100.5), "boundary_grid"),
        (lambda d: d["kernel"].update(shape="box"), "kernel.shape"),
        (lambda d: d.update(rim_points=[[3, 0.0]]), "rim_points[0][0]"),
        (lambda d: d.update(domain={"kind": "annulus", "r_inner": 2, "r_outer": 1}), "domain"),
        (lambda d: d.update(schema_version=2), "schema_version"),
        (lambda d: d.update(weyl_window=[50, 10]), "weyl_window"),
    ],
)
def test_validation_messages(mutate, field):
    d = copy.deepcopy(BASE)
    mutate(d)
    with pytest.raises(ConfigError) as exc:
        parse_config(d)
    assert str(exc.value).startswith(field)


def test_validation_exit_code(tmp_path, capsys):
    cfg = make(tmp_path, bc="robin")
    assert run(tmp_path, "spectrum", cfg, "o") == cli.EXIT_VALIDATION
    assert "bc:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["spectrum", "--config", str(bad)]) == cli.EXIT_VALIDATION
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_VALIDATION


@pytest.mark.parametrize("seed", ["-1", str(2**64)])
def test_seed_range(tmp_path, seed):
    assert run(tmp_path, "billiard", make(tmp_path), "o", "--seed", seed) == cli.EXIT_VALIDATION


def test_internal_error_exit(tmp_path, monkeypatch):
    def boom(run):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.RUNNERS, "spectrum", boom)
    assert run(tmp_path, "spectrum", make(tmp_path), "o") == cli.EXIT_INTERNAL


def test_sinai_spectral_subcommand_rejected(tmp_path):
    cfg = make(tmp_path, domain={"kind": "sinai", "side": 1.0, "obstacle_radius": 0.25}, rim_points=[[0, 0.0]])
    assert run(tmp_path, "weyl", cfg, "o") == cli.EXIT_VALIDATION
    assert run(tmp_path, "all", cfg, "o2") == cli.EXIT_OK
    man = json.loads((tmp_path / "o2" / "manifest.json").read_text())
    assert "spectrum" in man["skipped"]
    assert any(a["file"].startswith("billiard") for a in man["artifacts"])


# -- runs


def test_spectrum_rerun_uses_cache(tmp_path):
    cfg = make(tmp_path)
    assert run(tmp_path, "spectrum", cfg, "a") == 0
    cache = list((tmp_path / "a" / "cache").glob("spectrum-*.json"))
    assert len(cache) == 1
    stamp = cache[0].stat().st_mtime_ns
    assert run(tmp_path, "spectrum", cfg, "a") == 0
    assert cache[0].stat().st_mtime_ns == stamp
    first = (tmp_path / "a" / "spectrum.json").read_bytes()
    assert run(tmp_path, "spectrum", cfg, "b") == 0  # fresh solve in another directory
    assert (tmp_path / "b" / "spectrum.json").read_bytes() == first


def test_weyl_below_first_eigenvalue(tmp_path):
    cfg = make(tmp_path, bc="dirichlet", lambda_max=3.0)
    assert run(tmp_path, "weyl", cfg, "o") == 0
    header, rows = read_csv(tmp_path / "o" / "weyl_pi_b.csv")
    cols = [i for i, h in enumerate(header) if h.startswith("pi_b_")]
    assert rows and all(float(r[i]) == 0.0 for r in rows for i in cols)


def test_manifest_traceability(tmp_path):
    cfg = make(tmp_path)
    assert run(tmp_path, "weyl", cfg, "o") == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["config_hash"] == parse_config(json.loads(cfg.read_text())).config_hash()
    assert man["artifacts"]
    for art in man["artifacts"]:
        data = (tmp_path / "o" / art["file"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == art["sha256"]
        assert art["module"] and art["operation"]
    assert (tmp_path / "o" / "timings.json").exists()


def test_seed_override_changes_billiard(tmp_path):
    cfg = make(tmp_path)
    assert run(tmp_path, "billiard", cfg, "a") == 0
    assert run(tmp_path, "billiard", cfg, "b", "--seed", "99") == 0
    a = (tmp_path / "a" / "billiard_samples_0.csv").read_bytes()
    b = (tmp_path / "b" / "billiard_samples_0.csv").read_bytes()
    assert a != b
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man["config"]["billiard"]["seed"] == 99


def test_all_reproducible_and_thread_invariant(tmp_path):
    cfg = make(tmp_path)
    assert run(tmp_path, "all", cfg, "a") == 0
    assert run(tmp_path, "all", cfg, "b") == 0
    assert run(tmp_path, "all", cfg, "c", "--threads", "4") == 0
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    for other in ("b", "c"):
        assert (tmp_path / other / "manifest.json").read_bytes() == (tmp_path / "a" / "manifest.json").read_bytes()
        for art in man["artifacts"]:
            assert (tmp_path / other / art["file"]).read_bytes() == (tmp_path / "a" / art["file"]).read_bytes()
    assert main(["--compare", str(tmp_path / "a"), str(tmp_path / "c"), "--out", str(tmp_path / "rep")]) == 0
    report = json.loads((tmp_path / "rep" / "compare_report.json").read_text())
    assert not report["breach"]
    for s in report["series"].values():
        for col in s.values():
            assert col["max_abs_dev"] == 0.0


def _hemi_cfg(tmp_path, name, r, grid=1024):
    return make(tmp_path, name, domain={"kind": "cap", "cap_radius": r}, lambda_max=60.0, boundary_grid=grid,
                rim_points=[[0, 0.0]])


def test_hemisphere_saturation_tail(tmp_path):
    cfg = _hemi_cfg(tmp_path, "hemi", math.pi / 2)
    assert run(tmp_path, "supnorm", cfg, "h") == 0
    s = json.loads((tmp_path / "h" / "supnorm.json").read_text())
    z = s["zonal"]
    assert z["baseline"] == pytest.approx(zonal_ratio_limit())
    assert abs(z["tail_mean"] / z["baseline"] - 1) <= 0.02


def test_compare_orders_hemisphere_above_cap(tmp_path):
    assert run(tmp_path, "supnorm", _hemi_cfg(tmp_path, "hemi", math.pi / 2), "h") == 0
    assert run(tmp_path, "supnorm", _hemi_cfg(tmp_path, "cap", math.pi / 3), "c") == 0
    a = tmp_path / "h" / "supnorm_envelope.csv"
    b = tmp_path / "c" / "supnorm_envelope.csv"
    code = main(["--compare", str(a), str(b), "--tol", "10"])
    assert code == 0
    rep = cli.compare(a, b, tol=10.0, rtol=0.0)
    cols = rep["series"]["supnorm_envelope.csv"]
    assert cols["envelope"]["ordering"] == "a>b"
    assert cols["lam"]["max_abs_dev"] == 0.0
    assert main(["--compare", str(a), str(b), "--tol", "1e-6"]) == cli.EXIT_TOLERANCE


def test_grid_halving_convergence(tmp_path):
    assert run(tmp_path, "supnorm", _hemi_cfg(tmp_path, "fine", math.pi / 3, 2048), "f") == 0
    assert run(tmp_path, "supnorm", _hemi_cfg(tmp_path, "coarse", math.pi / 3, 1024), "g") == 0
    rep = cli.compare(tmp_path / "f" / "supnorm.csv", tmp_path / "g" / "supnorm.csv", tol=1e-9, rtol=0.0)
    cols = rep["series"]["supnorm.csv"]
    # the sup converges; its location is not unique (e.g. the constant mode), so argmax is not compared
    for name in ("lam", "sup_trace", "ratio"):
        assert not cols[name]["breach"], cols[name]


def test_compare_schema_mismatch(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("x,y\n1,2\n")
    b.write_text("x,z\n1,2\n")
    assert main(["--compare", str(a), str(b)]) == cli.EXIT_VALIDATION


def test_compare_identical_files(tmp_path):
    a = tmp_path / "a.json"
    a.write_text(json.dumps({"x": 1.0, "y": {"z": [1, 2]}}))
    rep = cli.compare(a, a, tol=0.0, rtol=0.0)
    assert not rep["breach"]
    assert all(v["max_abs_dev"] == 0.0 for v in rep["series"]["a.json"].values())
