import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from hardyscope import cli

JOBS = Path(__file__).resolve().parents[1] / "docs" / "jobs"
VOLATILE = ("wall_time_s", "timestamp")


def _write(tmp_path, job, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(job))
    return str(path)


def _run(tmp_path, job, out="out", *extra):
    cfg = job if isinstance(job, str) else _write(tmp_path, job)
    code = cli.main(["run", "--config", cfg, "--out", str(tmp_path / out), "--threads", "1", *extra])
    return code, tmp_path / out


def _artifacts(out: Path) -> dict:
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    man = json.loads(files.pop("manifest.json"))
    for k in VOLATILE:
        man.pop(k)
    files["manifest.json"] = json.dumps(man, sort_keys=True).encode()
    return files


SANTALO = {"model": {"kind": "euclidean"}, "domain": {"type": "preset", "preset": "disk"},
           "task": "santalo", "params": {"n_samples": 20000, "integrand": "1-x^2-y^2", "seed": 3}}
WEIGHT = {"model": {"kind": "euclidean"}, "domain": {"type": "preset", "preset": "disk"},
          "task": "weight", "params": {"h": 0.1, "n_dirs": 360}}


@pytest.mark.parametrize("job", [SANTALO, WEIGHT], ids=["santalo", "weight"])
def test_rerun_is_byte_identical(tmp_path, job):
    c1, a = _run(tmp_path, job, "a")
    c2, b = _run(tmp_path, job, "b")
    assert c1 == c2 == 0
    assert _artifacts(a) == _artifacts(b)


def test_seed_override_changes_santalo(tmp_path):
    _, a = _run(tmp_path, SANTALO, "a")
    _, b = _run(tmp_path, SANTALO, "b", "--seed", "4")
    assert json.loads((b / "manifest.json").read_text())["seed"] == 4
    assert (a / "santalo.json").read_bytes() != (b / "santalo.json").read_bytes()


def test_manifest_hashes(tmp_path):
    _, out = _run(tmp_path, WEIGHT)
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["error"] is None
    names = {f["name"] for f in man["files"]}
    assert names == {"weight_field.csv", "weight_summary.json"}
    for f in man["files"]:
        assert hashlib.sha256((out / f["name"]).read_bytes()).hexdigest() == f["sha256"]


def test_disk_weight_at_centre(tmp_path):
    job = dict(WEIGHT, params={"h": 0.05, "n_dirs": 720})
    _, out = _run(tmp_path, job)
    data = np.genfromtxt(out / "weight_field.csv", delimiter=",", names=True)
    centre = np.argmin(np.hypot(data["x"], data["y"]))
    assert np.hypot(data["x"][centre], data["y"][centre]) < 1e-12
    assert data["m"][centre] == pytest.approx(1.0, abs=1e-3)


def test_bad_lambda_names_field(capsys):
    code = cli.main(["validate", "--config", str(JOBS / "bad_lambda.json")])
    assert code == 2
    assert "model.lambda" in capsys.readouterr().err


def test_unknown_task_lists_choices(tmp_path, capsys):
    code = cli.main(["validate", "--config", _write(tmp_path, dict(WEIGHT, task="integrate"))])
    err = capsys.readouterr().err
    assert code == 2 and "task" in err and "santalo" in err


def test_schema_minimum_reported(tmp_path, capsys):
    code = cli.main(["validate", "--config", _write(tmp_path, dict(WEIGHT, params={"n_dirs": 8}))])
    assert code == 2 and "params.n_dirs" in capsys.readouterr().err


def test_missing_domain(tmp_path, capsys):
    job = {"model": {"kind": "euclidean"}, "task": "weight"}
    assert cli.main(["validate", "--config", _write(tmp_path, job)]) == 2
    assert "domain" in capsys.readouterr().err


def test_custom_polygon_needs_unit_chart(tmp_path, capsys):
    job = {"model": {"kind": "custom_conformal", "lambda": "1/(4-x^2-y^2)", "chart_radius": 2.0},
           "domain": {"type": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]}, "task": "weight"}
    assert cli.main(["validate", "--config", _write(tmp_path, job)]) == 2
    assert "model.chart_radius" in capsys.readouterr().err


def test_validate_all_shipped_jobs(capsys):
    for path in sorted(JOBS.glob("*.json")):
        code = cli.main(["validate", "--config", str(path)])
        assert code == (2 if path.name == "bad_lambda.json" else 0), path.name


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    job = {"task": "hardy1d", "params": {"f": "x*(1-x)", "n_points": 2001}}
    assert cli.main(["run", "--config", _write(tmp_path, job)]) == 0
    res = json.loads((tmp_path / "env_out" / "hardy1d.json").read_text())
    assert res["weighted"] == pytest.approx(7 / 48, abs=1e-6)


def test_runtime_error_in_manifest(tmp_path):
    job = {"model": {"kind": "euclidean"}, "domain": {"type": "preset", "preset": "strip"},
           "task": "santalo", "params": {"n_samples": 100}}
    code, out = _run(tmp_path, job)
    man = json.loads((out / "manifest.json").read_text())
    assert code == 1 and man["status"] == "error"
    assert man["error"]["type"] == "DomainError"


def test_classify_ideal_triangle(tmp_path):
    code, out = _run(tmp_path, str(JOBS / "ideal_triangle_classify.json"))
    cert = json.loads((out / "certificate.json").read_text())
    assert code == 0 and cert["verdict"] == "discrete_spectrum_certified"


def test_square_spectrum(tmp_path):
    code, out = _run(tmp_path, str(JOBS / "square_spectrum.json"))
    rows = (out / "eigenvalues.csv").read_text().splitlines()
    assert code == 0 and rows[0] == "k,h,lambda,residual"
    lam = [float(r.split(",")[2]) for r in rows[1:]]
    assert lam[0] == pytest.approx(2 * np.pi**2, rel=1e-2)
    assert lam[1] == pytest.approx(5 * np.pi**2, rel=1e-2)
