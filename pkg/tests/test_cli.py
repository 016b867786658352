import json
import os
import subprocess
import sys

import numpy as np
import pytest

from riemann_mhd.cli import CSV_HEADER, main, table1_json, table1_text
from riemann_mhd.registry import build, fixture

FAST = {"family": "Fast", "kappa": 2.0, "epsilon": 1,
        "profiles": {"rho": {"terms": [{"kind": "const", "c": 1.0}, {"kind": "sin", "a": 0.2, "k": 2.0}]}},
        "constants": {"A0": 1.0, "H0": [0.0, 1.0, 0.0]}}
FAST_GRID = {"t": 0.05, "x": [-0.5, 0.5, 64], "y": 0.1, "z": 0.2}


def _run(tmp_path, command, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    out = tmp_path / "out.txt"
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def test_eigen_zero_field(tmp_path):
    cfg = {"state": {"rho": 1.0, "p": 1.0, "v": [0, 0, 0], "H": [0, 0, 0]}, "kappa": 1.4, "lvec": [1, 0, 0]}
    code, text = _run(tmp_path, "eigen", cfg)
    doc = json.loads(text)
    assert code == 0
    assert doc["deltaA"] == 0.0 and doc["deltaS"] == 0.0
    assert doc["deltaF"] == pytest.approx(np.sqrt(1.4))


def test_eigen_residuals(tmp_path):
    cfg = {"state": {"rho": 1.3, "p": 0.7, "v": [0.1, -0.2, 0.3], "H": [0.4, 0.9, -0.5]}, "kappa": 5 / 3,
           "lvec": [0.3, -0.8, 0.5]}
    code, text = _run(tmp_path, "eigen", cfg)
    assert code == 0
    fams = json.loads(text)["families"]
    assert {"E1", "E2", "E3", "Alfven+", "Alfven-", "Fast+", "Fast-", "Slow+", "Slow-"} <= set(fams)
    for entry in fams.values():
        assert entry["dispersion_residual"] <= 1e-10
        if "wave_relation_residual" in entry:
            assert entry["wave_relation_residual"] <= 1e-8


@pytest.mark.parametrize("cfg", ["{not json", json.dumps({"state": {"rho": -1, "p": 1}}),
                                 json.dumps({"state": {"rho": 1, "p": 1}, "lvec": [0, 0, 0]})])
def test_eigen_bad_input_exits_2(tmp_path, cfg):
    code, _ = _run(tmp_path, "eigen", cfg)
    assert code == 2


def test_missing_config_exits_2():
    assert main(["eigen"]) == 2
    assert main(["nonsense"]) == 2


def test_construct_fast_manifest(tmp_path):
    code, text = _run(tmp_path, "construct", {"solution": FAST})
    assert code == 0
    manifest = json.loads(text)
    assert manifest["metadata"]["beta0"] == pytest.approx(0.5)
    # the manifest rebuilds the same solution
    again = build(manifest["solution"])
    assert again.manifest()["solution"] == manifest["solution"]


def test_construct_ae1_writes_beta_csv(tmp_path):
    beta = tmp_path / "beta.csv"
    code, text = _run(tmp_path, "construct", fixture("AE1"), "--beta-csv", str(beta))
    assert code == 0
    assert json.loads(text)["beta_trajectory"]["Delta_sign"] == "nonnegative"
    lines = beta.read_text().splitlines()
    assert len(lines) > 10


def test_construct_ae1_negative_discriminant(tmp_path, capsys):
    cfg = json.loads(json.dumps(fixture("AE1")))
    cfg["solution"]["profiles"]["Hcal"] = 0.1
    code, _ = _run(tmp_path, "construct", cfg)
    assert code == 3
    assert "discriminant negative" in capsys.readouterr().err


def test_sample_header_and_constant_rows(tmp_path):
    cfg = {"solution": FAST, "grid": {"t": 0.0, "x": [0.0, 1e-9, 2], "y": 0.1, "z": 0.2}}
    code, text = _run(tmp_path, "sample", cfg)
    lines = text.splitlines()
    assert code == 0
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    # the two nodes are 5e-10 apart: the state columns agree to rounding
    a, b = ([float(v) for v in row.split(",")[4:]] for row in lines[1:])
    assert np.allclose(a, b, rtol=1e-8)


def test_sample_bit_identical_across_threads(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"solution": fixture("AA")["solution"],
                                "grid": {"t": 0.1, "x": [-0.5, 0.5, 40], "y": 0.0, "z": [-0.5, 0.5, 40]}}))
    outs = []
    for n in ("1", "8"):
        env = dict(os.environ, RIEMANN_MHD_THREADS=n)
        res = subprocess.run([sys.executable, "-m", "riemann_mhd.cli", "sample", "--config", str(path)],
                             env=env, capture_output=True, check=True)
        outs.append(res.stdout)
    assert outs[0] == outs[1]


def test_verify_passes_on_exact_solution(tmp_path):
    cfg = {"solution": FAST, "grid": FAST_GRID, "levels": [64, 128, 256],
           "checks": ["pde", "divH", "lorentz", "vorticity", "current", "circulation", "gmc", "rank"]}
    code, text = _run(tmp_path, "verify", cfg)
    report = json.loads(text)
    assert code == 0, {k: v.get("pass") for k, v in report["checks"].items()}
    assert report["checks"]["gmc"]["skipped"]
    assert report["checks"]["rank"]["max_rank"] == 1


def test_verify_perturbed_exits_5(tmp_path):
    cfg = {"solution": FAST, "grid": FAST_GRID, "checks": ["pde", "divH"],
           "perturb": {"field": "H", "amplitude": 1e-3, "seed": 1}}
    code, text = _run(tmp_path, "verify", cfg)
    assert code == 5
    assert json.loads(text)["checks"]["divH"]["pass"] is False


def test_verify_empty_checks(tmp_path):
    code, text = _run(tmp_path, "verify", {"solution": FAST, "grid": FAST_GRID, "checks": []})
    assert code == 0
    assert json.loads(text)["checks"] == {}


def test_verify_unknown_check_exits_2(tmp_path):
    code, _ = _run(tmp_path, "verify", {"solution": FAST, "grid": FAST_GRID, "checks": ["bogus"]})
    assert code == 2


def test_table1_text_and_json_agree(tmp_path):
    doc = table1_json()
    text = table1_text().splitlines()
    fams = doc["families"]
    assert text[0].split() == fams
    for i, row in enumerate(doc["matrix"]):
        cells = [tok for tok in text[i + 1].split() if tok in ("+", "-")]
        assert cells == row
    assert {"FF_planar", "FF_counter"} <= set(doc["constructors"]["FF"])
    assert "SS" not in doc["constructors"]
    out = tmp_path / "t.json"
    assert main(["table1", "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == doc
