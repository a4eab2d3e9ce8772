"""Command-line job runner.

    hardyscope run --config job.json [--out DIR] [--threads N] [--seed S]
    hardyscope validate --config job.json

A job file names a model, a domain and one task.  Artifacts (CSV/JSON) and a
``manifest.json`` with content hashes are written to the output directory,
chosen from ``--out``, then ``$HARDYSCOPE_OUT``, then the job's
``output.dir``, then ``./hardyscope_out``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import traceback
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import classify as cls_
from . import domain as dm
from . import flowcheck as fc
from . import hardy as hd
from . import spectrum as spc
from .expr import ExpressionError, parse
from .manifold import ManifoldModel

TASKS = ("weight", "hardy", "classify", "spectrum", "croke", "santalo", "hardy1d")
OUT_ENV = "HARDYSCOPE_OUT"

DEFAULTS = {
    "weight": {"h": 0.05, "n_dirs": 720, "t_max": None, "gamma_only": False},
    "hardy": {"h": 0.02, "n_dirs": 720, "t_max": None, "gamma_only": False, "refine": 4,
              "functions": [], "n_functions": 20, "seed": 0},
    "classify": {"epsilons": [0.2, 0.1], "n_samples": 2000, "h": 0.04, "n_dirs": 360, "c0": 2.0,
                 "ueb_k": 0.5, "cusp_points": 20, "seed": 0},
    "spectrum": {"h": 1 / 64, "k": 1, "tol": 1e-6, "cut_levels": [], "export_pencil": False, "seed": 0},
    "croke": {"h": 0.05, "n_dirs": 720, "t_max": None},
    "santalo": {"n_samples": 1_000_000, "integrand": "1", "seed": 0},
    "hardy1d": {"f": "x*(1-x)", "interval": [0.0, 1.0], "n_points": 100_001},
}


class ConfigError(ValueError):
    """Invalid job file; the message names the offending field."""


@dataclass
class JobConfig:
    task: str
    model: ManifoldModel
    domain: dm.DomainSpec | None
    params: dict
    output_dir: str | None
    raw: dict
    sha256: str
    seed: int = 0


@dataclass
class ReportBundle:
    manifest: dict
    out_dir: Path
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.manifest["status"] == "ok"


def schema() -> dict:
    return json.loads(resources.files("hardyscope").joinpath("data/job.schema.json").read_text())


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def _model(block: dict) -> ManifoldModel:
    kind = block["kind"]
    if kind == "euclidean":
        return ManifoldModel.euclidean()
    if kind == "poincare_disk":
        return ManifoldModel.poincare(float(block.get("b", 1.0)))
    if "lambda" not in block:
        raise ConfigError("model.lambda: required for custom_conformal models")
    try:
        expr = parse(block["lambda"])
    except ExpressionError as exc:
        raise ConfigError(f"model.lambda: {exc}") from None
    return ManifoldModel.custom(expr, block.get("chart_radius"))


def _polygon(model: ManifoldModel, vertices, gamma=None, name: str = "polygon") -> dm.DomainSpec:
    """Geodesic polygon; custom models reuse the hyperbolic sides of the unit-disk chart."""
    if model.closed_form:
        return dm.build_geodesic_polygon(model, vertices, gamma, name)
    if model.chart_radius != 1.0:
        raise ConfigError("model.chart_radius: polygons in custom models need the unit-disk chart")
    return dm.build_geodesic_polygon(ManifoldModel.poincare(), vertices, gamma, name).with_model(model)


def _vertex(v):
    return dm.ideal(v["ideal_angle_deg"]) if isinstance(v, dict) else complex(v[0], v[1])


def _domain(block: dict, model: ManifoldModel) -> dm.DomainSpec:
    kind = block["type"]
    name = block.get("name")
    if kind == "preset":
        preset = block.get("preset")
        if preset is None:
            raise ConfigError("domain.preset: required for preset domains")
        p = dict(block.get("params", {}))
        if "center" in p:
            p["center"] = complex(*p["center"])
        if "window" in p:
            p["window"] = tuple(p["window"])
        makers = {
            "unit_square": lambda: dm.unit_square(p.get("gamma")),
            "rectangle": lambda: dm.rectangle(p["x0"], p["x1"], p["y0"], p["y1"], p.get("gamma"), model),
            "disk": lambda: dm.disk(p.get("center", 0j), p.get("radius", 1.0), model),
            "geodesic_ball": lambda: dm.geodesic_ball(model, p.get("center", 0j), p.get("radius", 1.0)),
            "half_plane": lambda: dm.half_plane(**p),
            "strip": lambda: dm.strip(**p),
            "ideal_triangle": lambda: _polygon(model, [dm.ideal(a) for a in p.get("angles_deg", (90.0, 210.0, 330.0))],
                                               name="ideal_triangle"),
            "horn": lambda: dm.horn_domain(**p),
        }
        try:
            dom = makers[preset]()
        except KeyError as exc:
            raise ConfigError(f"domain.params: missing {exc}") from None
        except TypeError as exc:
            raise ConfigError(f"domain.params: {exc}") from None
        if preset in ("unit_square", "half_plane", "strip", "horn") and model.kind != "euclidean":
            dom = dom.with_model(model)
    elif kind == "polygon":
        verts = block.get("vertices")
        if not verts:
            raise ConfigError("domain.vertices: required for polygon domains")
        dom = _polygon(model, [_vertex(v) for v in verts], block.get("gamma"))
    else:
        segs = []
        for i, s in enumerate(block.get("segments", [])):
            where = f"domain.segments.{i}"
            g = s.get("gamma", True)
            try:
                if s["type"] == "straight":
                    segs.append(dm.straight(complex(*s["start"]), complex(*s["end"]), id=i, gamma=g))
                elif s["type"] == "arc":
                    segs.append(dm.arc(complex(*s["center"]), s["radius"], s["start_angle"], s["end_angle"],
                                       id=i, gamma=g))
                else:
                    segs.extend(dm.parametric(s["x"], s["y"], s["t0"], s["t1"], id=i, gamma=g))
            except KeyError as exc:
                raise ConfigError(f"{where}: missing {exc}") from None
            except ExpressionError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        if not segs:
            raise ConfigError("domain.segments: at least one segment is required")
        verts = [complex(*v) for v in block.get("vertices", []) if not isinstance(v, dict)]
        dom = dm.from_segments(model, segs, verts, block.get("bbox"))
    if name:
        from dataclasses import replace

        dom = replace(dom, name=name)
    return dom


def parse_config(raw: dict, seed: int | None = None) -> JobConfig:
    """Validate a job document and build the model, domain and filled-in parameters."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = jsonschema.exceptions.best_match(errors)
        if list(e.absolute_path) == ["task"]:
            raise ConfigError(f"task: unknown task {raw.get('task')!r}; valid tasks: {', '.join(TASKS)}")
        raise ConfigError(f"{_field(e.absolute_path)}: {e.message}")
    task = raw["task"]
    params = dict(DEFAULTS[task])
    params.update(raw.get("params", {}))
    if seed is not None:
        params["seed"] = int(seed)
    for i, src in enumerate(params.get("functions", []) if task == "hardy" else []):
        _parse_field(src, f"params.functions.{i}")
    if task == "santalo" and params["integrand"] != "1":
        _parse_field(params["integrand"], "params.integrand")
    if task == "hardy1d":
        _parse_field(params["f"], "params.f", ("x",))
    if task != "hardy1d":
        for key in ("model", "domain"):
            if key not in raw:
                raise ConfigError(f"{key}: required for task {task!r}")
    model = _model(raw.get("model", {"kind": "euclidean"}))
    try:
        domain = None if task == "hardy1d" else _domain(raw["domain"], model)
    except dm.DomainError as exc:
        raise ConfigError(f"domain: {exc}") from None
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return JobConfig(task, model, domain, params, raw.get("output", {}).get("dir"), raw,
                     hashlib.sha256(canon).hexdigest(), int(params.get("seed", 0)))


def _parse_field(src: str, where: str, variables=("x", "y")):
    try:
        return parse(src, variables)
    except ExpressionError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path, seed: int | None = None) -> JobConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: malformed JSON ({exc})") from None
    return parse_config(raw, seed)


# ---------------------------------------------------------------------------
# tasks: each writes artifacts and returns {check name: passed}
# ---------------------------------------------------------------------------

def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=cls_._json_default) + "\n")


def _quad(p) -> hd.DirectionQuadrature:
    return hd.DirectionQuadrature(p["n_dirs"], None, p.get("t_max"))


def _task_weight(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    f = hd.weight_field(cfg.domain, p["h"], _quad(p), p["gamma_only"], threads=threads)
    f.to_csv(out / "weight_field.csv")
    finite = np.isfinite(f.m)
    summary = {"nodes": int(f.points.size), "h": f.h, "n_dirs": f.quad.n_dirs, "t_max": f.t_max,
               "gamma_only": f.gamma_restricted, "m_min": float(f.m[finite].min()) if finite.any() else None,
               "m_over_d_max": float(np.max(f.m[finite] / f.d[finite])) if finite.any() else None,
               "max_rel_quad_error": float(f.rel_quad_error.max())}
    _dump(out / "weight_summary.json", summary)
    checks = {"positive": bool(np.all(f.m > 0))}
    if not p["gamma_only"]:
        checks["m_ge_d"] = bool(np.all(f.m >= f.d * (1 - 1e-9)))
    return checks


def _task_hardy(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    dom = cfg.domain
    f = hd.weight_field(dom, p["h"], _quad(p), p["gamma_only"], threads=threads)
    if p["functions"]:
        funcs = [hd.TestFunction.from_expression(s) for s in p["functions"]]
    else:
        funcs = hd.test_function_suite(dom, p["n_functions"], p["gamma_only"], p["seed"])
    reports = [hd.hardy_report(dom, fn, f, p["refine"]) for fn in funcs]
    _dump(out / "hardy_reports.json", [asdict(r) for r in reports])
    return {"energy_nonnegative": all(r.energy >= 0 for r in reports),
            "ratio_ge_1_minus_budget": all(r.ratio >= 1 - r.quad_error_budget for r in reports)}


def _task_classify(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    settings = cls_.ClassifySettings(tuple(p["epsilons"]), p["n_samples"], p["h"], p["n_dirs"], p["c0"],
                                     ueb_k=p["ueb_k"], cusp_points=p["cusp_points"], seed=p["seed"])
    cert = cls_.classify_domain(cfg.domain, settings, threads)
    (out / "certificate.json").write_text(cert.to_json() + "\n")
    checks = {"verdict_consistent": cert.verdict == cls_.combine_verdict(
        cert.verdict == cls_.COMPACT, (cert.qb or {}).get("verdict"), (cert.bdr or {}).get("verdict"))}
    if cert.bdr:
        checks["c_estimate_ge_1"] = cert.bdr["c_estimate"] >= 1 - 1e-9
    return checks


def _task_spectrum(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    dom = cfg.domain
    if p["cut_levels"]:
        st = spc.truncation_study(dom, p["cut_levels"], p["h"], p["k"], p["seed"], p["tol"])
        st.to_csv(out / "convergence.csv")
        _dump(out / "truncation_summary.json", {"monotone": st.monotone, "cauchy": st.cauchy(),
                                                "node_counts": st.node_counts, "notes": st.notes})
        checks = {"positive": bool(np.all(st.values > 0)), "monotone": st.monotone,
                  "residuals": bool(np.all(st.residuals < p["tol"]))}
        if st.cauchy() is not None:
            checks["cauchy"] = bool(st.cauchy())
        return checks
    grid, pencil = spc.assemble_pencil(dom, p["h"])
    if p["export_pencil"]:
        pencil.to_triplets(out / "pencil.txt")
    res = spc.lowest_eigenvalues(pencil, p["k"], p["tol"], p["seed"])
    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("k,h,lambda,residual\n")
        for i, (v, r) in enumerate(zip(res.values, res.residual_norms)):
            fh.write(f"{i + 1},{p['h']:.12g},{v:.12g},{r:.3e}\n")
    return {"positive": bool(np.all(res.values > 0)), "nondecreasing": bool(np.all(np.diff(res.values) >= 0)),
            "residuals": bool(np.all(res.residual_norms < p["tol"]))}


def _task_croke(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    _, pts = hd.interior_nodes(cfg.domain, p["h"])
    r = hd.croke_bound(cfg.domain, _quad(p), pts)
    _dump(out / "croke.json", {"bound": r.bound, "argmin": r.argmin, "n_points": int(pts.size),
                               "infinite_chords": r.infinite_chords})
    return {"positive": r.bound > 0, "finite": bool(np.isfinite(r.bound))}


def _task_santalo(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    if p["integrand"] == "1":
        F = fc.Integrand.constant(1.0)
    else:
        F = fc.Integrand.basepoint(parse(p["integrand"]), p["integrand"])
    rep = fc.santalo_compare(cfg.domain, F, p["n_samples"], p["seed"])
    (out / "santalo.json").write_text(rep.to_json() + "\n")
    return {"agree_3sigma": rep.agree}


def _task_hardy1d(cfg: JobConfig, out: Path, threads: int) -> dict:
    p = cfg.params
    fx = parse(p["f"], ("x",))
    a, b = (float("inf") if v == "inf" else float(v) for v in p["interval"])
    r = hd.hardy_1d(fx, (a, b), p["n_points"])
    _dump(out / "hardy1d.json", {"f": p["f"], "interval": p["interval"], "energy": r.energy,
                                 "weighted": r.weighted, "ratio": r.ratio})
    return {"ratio_ge_1": r.ratio >= 1 - 1e-4}


RUNNERS = {"weight": _task_weight, "hardy": _task_hardy, "classify": _task_classify,
           "spectrum": _task_spectrum, "croke": _task_croke, "santalo": _task_santalo,
           "hardy1d": _task_hardy1d}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def resolve_out_dir(cfg: JobConfig, out: str | None) -> Path:
    return Path(out or os.environ.get(OUT_ENV) or cfg.output_dir or "hardyscope_out")


def run_job(cfg: JobConfig, out: str | None = None, threads: int = 1) -> ReportBundle:
    """Run the task, write artifacts and ``manifest.json``; errors are recorded, not raised."""
    out_dir = resolve_out_dir(cfg, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    checks, error = {}, None
    try:
        checks = RUNNERS[cfg.task](cfg, out_dir, max(1, int(threads)))
    except Exception as exc:  # reported in the manifest, exit status nonzero
        error = {"type": type(exc).__name__, "message": str(exc),
                 "traceback": traceback.format_exc(limit=5)}
    files = sorted(p for p in out_dir.iterdir() if p.is_file() and p.name != "manifest.json")
    status = "ok" if error is None and all(checks.values()) else ("error" if error else "checks_failed")
    manifest = {
        "tool": "hardyscope", "version": __version__, "task": cfg.task, "config_sha256": cfg.sha256,
        "seed": cfg.seed, "wall_time_s": round(time.perf_counter() - start, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "files": [{"name": p.name, "sha256": _sha256(p)} for p in files],
        "checks": checks, "status": status, "error": error,
    }
    _dump(out_dir / "manifest.json", manifest)
    return ReportBundle(manifest, out_dir, checks)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hardyscope", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a job")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help=f"output directory (overrides ${OUT_ENV})")
    run.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    run.add_argument("--seed", type=int, default=None)
    val = sub.add_parser("validate", help="check a job file without running it")
    val.add_argument("--config", required=True)
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config, getattr(args, "seed", None))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"ok: task={cfg.task} domain={cfg.domain.name if cfg.domain else '-'} params={json.dumps(cfg.params, sort_keys=True)}")
        return 0
    bundle = run_job(cfg, args.out, args.threads)
    print(json.dumps({"status": bundle.manifest["status"], "out": str(bundle.out_dir),
                      "checks": bundle.checks}, sort_keys=True))
    if bundle.manifest["error"]:
        print(f"error: {bundle.manifest['error']['message']}", file=sys.stderr)
    return 0 if bundle.ok else 1


if __name__ == "__main__":
    sys.exit(main())
