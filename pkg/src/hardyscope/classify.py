"""Numerical evidence for discreteness of the Dirichlet spectrum.

A domain whose deep sets ``{d >= eps}`` are all compact (quasi-bounded) and
whose weight satisfies ``m <= c d`` (boundary distance regular) has purely
discrete spectrum.  The probes here sample both properties, along with the
interior-cone and exterior-ball conditions that imply regularity.  The
results are evidence with recorded sample counts, not proofs.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import (DomainError, DomainSpec, _chart_distance_to_segment, boundary_distance,
                     chart_distance, contains, from_frame, one_sided_hits)
from .hardy import DirectionQuadrature, WeightField, mean_hitting_weight, weight_field
from .manifold import as_complex, curvature

QUASI_BOUNDED = "quasi_bounded"
NOT_QUASI_BOUNDED = "not"
INCONCLUSIVE = "inconclusive"
REGULAR = "regular"

CERTIFIED = "discrete_spectrum_certified"
COMPACT = "compact_case"
REFUTED = "refuted_quasi_boundedness"


# ---------------------------------------------------------------------------
# quasi-boundedness
# ---------------------------------------------------------------------------

@dataclass
class QBReport:
    epsilons: list
    diam_estimates: list
    diam_doubled: list
    counts: list
    verdict: str
    notes: list = field(default_factory=list)


def _shell_samples(dom: DomainSpec, n: int, rng: np.random.Generator, n_shells: int = 8) -> np.ndarray:
    """Chart points in the window plus geometrically growing shells around it.

    Unbounded euclidean domains get windows scaled by ``2^j``; Poincare
    domains get annuli ``1 - 2^-j < |z| < 1 - 2^-(j+1)`` near the ideal boundary.
    """
    x0, x1, y0, y1 = dom.bbox
    base = rng.uniform(x0, x1, n) + 1j * rng.uniform(y0, y1, n)
    parts = [base]
    if not dom.bounded:
        c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        for j in range(1, n_shells + 1):
            s = 2.0**j
            parts.append(c + s * (rng.uniform(x0, x1, n) - c.real) + 1j * s * (rng.uniform(y0, y1, n) - c.imag))
    elif dom.model.chart_radius is not None:
        R = dom.model.chart_radius
        for j in range(1, 3 * n_shells + 1):
            r = R * (1 - 2.0**-j * rng.uniform(0.5, 1.0, n))
            parts.append(r * np.exp(2j * np.pi * rng.uniform(size=n)))
    return np.concatenate(parts)


def _hull_vertices(w: np.ndarray) -> np.ndarray:
    from scipy.spatial import ConvexHull, QhullError

    if w.size < 4:
        return np.arange(w.size)
    try:
        return ConvexHull(np.stack([w.real, w.imag], axis=1)).vertices
    except QhullError:  # collinear samples
        return np.array([int(np.argmin(w.real + w.imag)), int(np.argmax(w.real + w.imag)),
                         int(np.argmin(w.real - w.imag)), int(np.argmax(w.real - w.imag))])


def _diameter(dom: DomainSpec, z: np.ndarray) -> float:
    """Largest pairwise metric distance in a point sample.

    Distance is convex along geodesics, so the maximum is attained at vertices
    of the geodesic convex hull: the euclidean hull in the flat model and in
    the Klein image of the Poincare disk.
    """
    if z.size < 2:
        return 0.0
    model = dom.model
    if model.kind == "euclidean":
        z = z[_hull_vertices(z)]
    elif model.kind == "poincare_disk":
        z = z[_hull_vertices(2 * z / (1 + np.abs(z) ** 2))]
    else:
        # shooting distances are expensive: restrict to chart-extreme points
        keys = [z.real, -z.real, z.imag, -z.imag, z.real + z.imag, z.real - z.imag,
                -z.real + z.imag, -z.real - z.imag]
        z = z[np.unique([int(np.argmax(k)) for k in keys])]
    best = 0.0
    for k in range(0, z.size, 512):
        d = model.distance(z[k:k + 512, None], z[None, :])
        best = max(best, float(np.max(d)))
    return best


def quasibounded_probe(dom: DomainSpec, epsilons: Sequence[float], n_samples: int = 2000,
                       seed: int = 0, growth: float = 10.0, stable_tol: float = 0.1) -> QBReport:
    """Sample the deep sets ``{d >= eps}`` and watch their metric diameters.

    A set is declared unbounded when it contains two points farther apart
    than ``growth`` times the diameter of the sampling window; it counts as
    bounded when the diameter estimate changes by less than ``stable_tol``
    (relative) on doubling the sample count.
    """
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps):
        raise ValueError("epsilons must be positive")
    rng = np.random.default_rng(seed)
    z1 = _shell_samples(dom, n_samples, rng)
    z2 = np.concatenate([z1, _shell_samples(dom, n_samples, rng)])
    inside = contains(dom, z2)
    z2 = z2[inside]
    first = inside[: z1.size]
    d2 = boundary_distance(dom, z2) if dom.model.closed_form else np.array(
        [boundary_distance(dom, z) for z in z2])
    x0, x1, y0, y1 = dom.bbox
    window = np.array([x0 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1, x1 + 1j * y0])
    window = window[dom.model.in_chart(window)] if dom.model.chart_radius is not None else window
    ref = max(_diameter(dom, window), 1e-12) if window.size >= 2 else 1.0
    if dom.model.kind == "poincare_disk":
        ref = max(_diameter(dom, z2[d2 >= max(eps)]) if np.any(d2 >= max(eps)) else 0.0, 1e-12)
    n_first = int(first.sum())
    diams, doubled, counts, notes, verdicts = [], [], [], [], []
    for e in eps:
        deep = d2 >= e
        a = z2[:n_first][deep[:n_first]]
        b = z2[deep]
        counts.append(int(b.size))
        if b.size == 0:
            notes.append(f"eps={e:g}: no sampled points, skipped")
            diams.append(0.0)
            doubled.append(0.0)
            continue
        da, db = _diameter(dom, a), _diameter(dom, b)
        diams.append(da)
        doubled.append(db)
        if db > growth * ref:
            verdicts.append(NOT_QUASI_BOUNDED)
            notes.append(f"eps={e:g}: witness pair at distance {db:.4g} > {growth:g} x {ref:.4g}")
        elif db > 0 and abs(db - da) <= stable_tol * db:
            verdicts.append(QUASI_BOUNDED)
        else:
            verdicts.append(INCONCLUSIVE)
    if NOT_QUASI_BOUNDED in verdicts:
        verdict = NOT_QUASI_BOUNDED
    elif verdicts and all(v == QUASI_BOUNDED for v in verdicts):
        verdict = QUASI_BOUNDED
    else:
        verdict = INCONCLUSIVE
    return QBReport(eps, diams, doubled, counts, verdict, notes)


# ---------------------------------------------------------------------------
# boundary distance regularity
# ---------------------------------------------------------------------------

@dataclass
class BDRReport:
    c_estimate: float
    n_nodes: int
    n_excluded: int
    cusp_sequences: list
    verdict: str


def _interior_reference(dom: DomainSpec) -> complex:
    from .hardy import _interior_probe

    return _interior_probe(dom)


def cusp_paths(dom: DomainSpec, n_points: int = 20, start: complex | None = None) -> list[np.ndarray]:
    """Points on the geodesic from an interior point toward each ideal vertex.

    The ``j``-th point sits at chart distance ``2^-j`` from the vertex.
    """
    from scipy.optimize import brentq

    if dom.model.kind != "poincare_disk":
        if dom.ideal_vertices:
            raise DomainError("cusp paths need the Poincare model")
        return []
    p0 = _interior_reference(dom) if start is None else complex(as_complex(start))
    paths = []
    for v in dom.ideal_vertices:
        # in the frame of p0 the geodesic is a radius towards the image of v
        from .domain import _to_frame

        w = complex(_to_frame(dom.model, np.array([p0]), np.array([v]))[0])
        direction = w / abs(w)
        point = lambda s: complex(from_frame(dom.model, np.array([p0]), np.array([s * direction]))[0])  # noqa: E731
        pts = []
        for j in range(1, n_points + 1):
            target = 2.0**-j
            g = lambda s: abs(point(s) - v) - target  # noqa: E731
            if g(0.0) <= 0:
                continue
            pts.append(point(brentq(g, 0.0, 1.0, xtol=1e-300, rtol=1e-15, maxiter=500)))
        paths.append(np.array(pts))
    return paths


def _envelope_ok(seq: np.ndarray, tol: float = 0.1) -> bool:
    seq = np.asarray(seq, float)
    if seq.size < 4 or not np.all(np.isfinite(seq)):
        return False
    q = max(1, seq.size // 4)
    return bool(np.max(seq[-q:]) <= (1 + tol) * np.max(seq[:-q]))


def bdr_estimate(dom: DomainSpec, field_: WeightField, paths: Optional[list] = None,
                 quad: DirectionQuadrature | None = None) -> BDRReport:
    """Largest sampled ``m/d`` and ``m/d`` along paths into each ideal vertex."""
    if field_.gamma_restricted:
        raise ValueError("regularity needs a full-boundary weight field")
    ok = np.isfinite(field_.m) & (field_.d > 0)
    ratios = field_.m[ok] / field_.d[ok]
    c = float(ratios.max()) if ratios.size else np.inf
    if paths is None:
        paths = cusp_paths(dom)
    quad = quad or field_.quad
    seqs = []
    for path in paths:
        z = np.asarray(path, complex)
        z = z[contains(dom, z)]
        if z.size == 0:
            seqs.append([])
            continue
        m = np.atleast_1d(mean_hitting_weight(dom, z, quad))
        d = np.atleast_1d(boundary_distance(dom, z))
        seqs.append([float(x) for x in m / d])
    bounded_paths = all(_envelope_ok(s) for s in seqs)
    verdict = REGULAR if np.isfinite(c) and bounded_paths else INCONCLUSIVE
    return BDRReport(c, int(ok.sum()), int((~ok).sum()), seqs, verdict)


# ---------------------------------------------------------------------------
# interior cones and exterior balls
# ---------------------------------------------------------------------------

def uic_check(dom: DomainSpec, p, c0: float, quad: DirectionQuadrature = DirectionQuadrature(),
              n_check: int = 257, iters: int = 40) -> float:
    """Opening angle of the largest symmetric cone of directions with one-sided hits below ``c0 d(p)``.

    The cone is centred on the direction of the shortest one-sided hit; its
    half-angle is found by bisection with ``n_check`` directions sampled on
    each candidate cone.  Returns ``2 pi`` when every direction qualifies and
    0 when none does.
    """
    if not c0 > 1:
        raise ValueError("c0 must exceed 1")
    z = complex(as_complex(p))
    if not contains(dom, z):
        raise DomainError("cone apex must be an interior point")
    d = float(boundary_distance(dom, z))
    bound = c0 * d
    th = quad.angles
    t = one_sided_hits(dom, z, th, quad.t_max)
    k = int(np.argmin(t))
    theta_star = float(th[k])
    if np.isfinite(t[k]):
        from scipy.optimize import minimize_scalar

        width = 2 * np.pi / quad.n_dirs
        res = minimize_scalar(lambda a: float(one_sided_hits(dom, z, a, quad.t_max)[0]),
                              bounds=(theta_star - width, theta_star + width), method="bounded",
                              options={"xatol": 1e-10})
        if res.fun <= t[k]:
            theta_star = float(res.x)
    s = np.linspace(-1.0, 1.0, n_check)

    def cone_ok(beta):
        hits = one_sided_hits(dom, z, theta_star + beta * s, quad.t_max)
        return bool(np.all(hits < bound))

    if not cone_ok(0.0):
        return 0.0
    if cone_ok(np.pi):
        return 2 * np.pi
    lo, hi = 0.0, np.pi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cone_ok(mid):
            lo = mid
        else:
            hi = mid
    return 2 * lo


def _segment_at(dom: DomainSpec, q: complex, tol: float = 1e-9):
    best, seg = np.inf, None
    for s in dom.segments:
        dist = float(_chart_distance_to_segment(s, np.array([q]))[0])
        if dist < best:
            best, seg = dist, s
    if best > tol:
        raise DomainError("point is not on the boundary")
    for v in dom.vertices:
        if not v.ideal and abs(v.point - q) <= 1e-9:
            raise DomainError("exterior-ball test needs a smooth boundary point, not a vertex")
    return seg


def _outward_normal(dom: DomainSpec, seg, q: complex) -> complex:
    A, B, _ = seg.coeffs
    n = A * q + B  # gradient of the circle function (up to a factor 2)
    n = n / abs(n)
    step = 1e-7 * max(1.0, abs(q))
    inside_plus = bool(contains(dom, q + step * n))
    return -n if inside_plus else n


def _ball_samples(dom: DomainSpec, c: complex, R: float, n_rad: int, n_ang: int) -> np.ndarray:
    model = dom.model
    rho = np.concatenate([np.linspace(0.0, 1.0, n_rad)[1:], 1 - np.logspace(-6, -2, 8)])
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    t = np.outer(rho, np.ones_like(ang)) * R * (1 - 1e-6)
    if model.closed_form:
        w = model.frame_radius(t) * np.exp(1j * ang)[None, :]
        return np.concatenate([[c], from_frame(model, np.full(w.shape, c), w).ravel()])
    from .manifold import GeodesicBatch

    v0 = np.exp(1j * ang) / model.lam(c)
    out = [np.array([c])]
    for tk in np.unique(t[:, 0]):
        if tk <= 0:
            continue
        b = GeodesicBatch(model, np.full(ang.shape, c), v0, tk)
        b.run()
        out.append(b.y[:, 0][~b.early])
    return np.concatenate(out)


def ueb_check(dom: DomainSpec, q_boundary, k: float, probe_radii: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
              n_rad: int = 40, n_ang: int = 256) -> bool:
    """Does some ball ``B(q, k d_g(q_boundary, q))`` centred on the outward normal miss the domain?"""
    if not k > 0:
        raise ValueError("k must be positive")
    qb = complex(as_complex(q_boundary))
    seg = _segment_at(dom, qb)
    n = _outward_normal(dom, seg, qb)
    for r in probe_radii:
        c = qb + r * n
        if not dom.model.in_chart(c):
            continue
        R = k * float(dom.model.distance(qb, c))
        pts = _ball_samples(dom, c, R, n_rad, n_ang)
        pts = pts[dom.model.in_chart(pts)] if dom.model.chart_radius is not None else pts
        if not np.any(contains(dom, pts)):
            return True
    return False


# ---------------------------------------------------------------------------
# certificate
# ---------------------------------------------------------------------------

@dataclass
class ClassifySettings:
    epsilons: tuple = (0.2, 0.1)
    n_samples: int = 2000
    h: float = 0.04
    n_dirs: int = 360
    c0: float = 2.0
    n_uic: int = 16
    ueb_k: float = 0.5
    n_ueb: int = 8
    cusp_points: int = 20
    seed: int = 0


@dataclass
class Certificate:
    domain: str
    verdict: str
    qb: Optional[dict]
    bdr: Optional[dict]
    uic: Optional[dict]
    ueb: Optional[dict]
    seed: int
    settings: dict
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def combine_verdict(compact: bool, qb_verdict: Optional[str], bdr_verdict: Optional[str]) -> str:
    """Overall verdict from the sub-report verdicts."""
    if compact:
        return COMPACT
    if qb_verdict == NOT_QUASI_BOUNDED:
        return REFUTED
    if qb_verdict == QUASI_BOUNDED and bdr_verdict == REGULAR:
        return CERTIFIED
    return INCONCLUSIVE


def _safe(fn, notes, label):
    try:
        return fn()
    except (DomainError, ValueError, RuntimeError) as exc:
        notes.append(f"{label} failed: {exc}")
        return None


def classify_domain(dom: DomainSpec, cfg: ClassifySettings = ClassifySettings(), threads: int = 1) -> Certificate:
    """Run every probe and assemble a certificate; failures become notes, not exceptions."""
    notes: list[str] = []
    settings = asdict(cfg)
    if dom.compact:
        notes.append("bounded chart closure inside the chart with regular boundary")
        return Certificate(dom.name, COMPACT, None, None, None, None, cfg.seed, settings, notes)
    quad = DirectionQuadrature(cfg.n_dirs)
    qb = _safe(lambda: quasibounded_probe(dom, cfg.epsilons, cfg.n_samples, cfg.seed), notes, "qb probe")
    field_ = _safe(lambda: weight_field(dom, cfg.h, quad, threads=threads), notes, "weight field")
    bdr = None
    if field_ is not None:
        bdr = _safe(lambda: bdr_estimate(dom, field_, cusp_paths(dom, cfg.cusp_points), quad), notes, "bdr")
    uic = None
    if field_ is not None:
        rng = np.random.default_rng(cfg.seed + 1)
        idx = np.sort(rng.choice(field_.points.size, min(cfg.n_uic, field_.points.size), replace=False))
        pts = field_.points[idx]
        angles = [_safe(lambda p=p: uic_check(dom, p, cfg.c0, quad), notes, "uic") for p in pts]
        good = [a for a in angles if a is not None]
        uic = {"c0": cfg.c0, "n_points": len(good), "alpha_min": min(good) if good else None}
    ueb = None
    finite = [s for s in dom.segments if s.finite]
    if finite:
        u = (np.arange(cfg.n_ueb) + 0.5) / cfg.n_ueb
        qs = [complex(s.point_at(np.array([ui]))[0]) for s in finite for ui in u]
        qs = [q for q in qs if dom.model.in_chart(q)]
        res = [_safe(lambda q=q: ueb_check(dom, q, cfg.ueb_k), notes, "ueb") for q in qs]
        res = [r for r in res if r is not None]
        ueb = {"k": cfg.ueb_k, "n_points": len(res), "pass_fraction": float(np.mean(res)) if res else None}
    if field_ is not None:
        zk = field_.points[:: max(1, field_.points.size // 200)]
        if dom.model.chart_radius is not None:
            zk = zk[dom.model.chart_radius - np.abs(zk) > 1e-3]
        K = curvature(dom.model, zk)
        notes.append(f"sampled curvature range [{np.min(K) + 0.0:.4g}, {np.max(K) + 0.0:.4g}]; with curvature "
                     "bounded below, quasi-boundedness is also necessary for discreteness")
    verdict = combine_verdict(False, qb.verdict if qb else None, bdr.verdict if bdr else None)
    return Certificate(dom.name, verdict, asdict(qb) if qb else None, asdict(bdr) if bdr else None,
                       uic, ueb, cfg.seed, settings, notes)
