"""Domains with piecewise smooth boundary, boundary distance and ray casting.

Boundary pieces are straight segments, circular arcs or (euclidean only)
infinite lines, each written as a generalised circle
``A|z|^2 + 2 Re(conj(B) z) + C = 0``.  For the euclidean and Poincare models
a ray query at ``p`` is answered in the frame where an isometry has moved
``p`` to the origin: geodesics through ``p`` become straight lines through
0 and boundary pieces stay generalised circles, so hits are roots of a
quadratic.  Custom conformal models fall back to numerical geodesic
integration with sign-change detection and bisection.

Orientation convention: the domain lies to the left of every segment.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .expr import parse
from .manifold import (GeodesicBatch, ManifoldModel, as_complex, as_xy, dp_step)

INFINITE = np.inf
ON_BOUNDARY_TOL = 1e-15
MEMBER_TOL = 1e-12


class DomainError(ValueError):
    """Invalid domain construction or a query outside the domain."""


@dataclass(frozen=True)
class IdealPoint:
    """A vertex on the ideal boundary, given by its angle on the unit circle."""

    angle: float

    @property
    def z(self) -> complex:
        return complex(np.exp(1j * self.angle))


def ideal(angle_deg: float) -> IdealPoint:
    return IdealPoint(np.deg2rad(angle_deg))


@dataclass(frozen=True)
class Vertex:
    point: complex
    ideal: bool = False


@dataclass(frozen=True)
class BoundarySegment:
    """One smooth boundary piece.

    ``shape`` is the chart geometry (``"straight"``, ``"arc"``, ``"circle"``
    for a full circle, ``"line"`` for an infinite line); ``kind`` records
    what the piece is (``geodesic_arc``, ``euclidean_arc``, ``straight``,
    ``line`` or ``parametric``).  Parametric curves are stored as several
    straight pieces sharing one ``id``.
    """

    id: int
    kind: str
    shape: str
    start: Optional[complex] = None
    end: Optional[complex] = None
    center: Optional[complex] = None
    radius: Optional[float] = None
    angle0: float = 0.0
    sweep: float = 0.0
    direction: Optional[complex] = None
    gamma_member: bool = True
    ideal_start: bool = False
    ideal_end: bool = False

    @property
    def finite(self) -> bool:
        return self.shape != "line"

    @property
    def coeffs(self) -> tuple[float, complex, float]:
        """``(A, B, C)`` of the generalised circle carrying this piece."""
        if self.shape in ("arc", "circle"):
            c = self.center
            return 1.0, -c, abs(c) ** 2 - self.radius**2
        if self.shape == "straight":
            a, b = self.start, self.end
            n = 1j * (b - a)
            n = n / abs(n)
        else:
            a, n = self.start, 1j * self.direction
        return 0.0, n / 2, -(np.conj(n) * a).real

    @property
    def mid(self) -> complex:
        return complex(self.point_at(0.5))

    def point_at(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.shape == "straight":
            return self.start + u * (self.end - self.start)
        if self.shape in ("arc", "circle"):
            return self.center + self.radius * np.exp(1j * (self.angle0 + u * self.sweep))
        return self.start + (u - 0.5) * self.direction  # unit-speed line through start

    def tangent_at(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.shape == "straight":
            d = self.end - self.start
            return np.full(u.shape, d / abs(d))
        if self.shape in ("arc", "circle"):
            return 1j * np.sign(self.sweep) * np.exp(1j * (self.angle0 + u * self.sweep))
        return np.full(u.shape, self.direction)

    def chart_length(self) -> float:
        if self.shape == "straight":
            return abs(self.end - self.start)
        if self.shape in ("arc", "circle"):
            return abs(self.sweep) * self.radius
        return np.inf

    def flipped(self) -> "BoundarySegment":
        if self.shape == "straight":
            return replace(self, start=self.end, end=self.start,
                           ideal_start=self.ideal_end, ideal_end=self.ideal_start)
        if self.shape in ("arc", "circle"):
            return replace(self, start=self.end, end=self.start, angle0=self.angle0 + self.sweep,
                           sweep=-self.sweep, ideal_start=self.ideal_end, ideal_end=self.ideal_start)
        return replace(self, direction=-self.direction)


def straight(a, b, *, id: int = 0, gamma: bool = True, kind: str = "straight",
             ideal_start=False, ideal_end=False) -> BoundarySegment:
    a, b = complex(as_complex(a)), complex(as_complex(b))
    if a == b:
        raise DomainError("degenerate straight segment")
    return BoundarySegment(id, kind, "straight", start=a, end=b, gamma_member=gamma,
                           ideal_start=ideal_start, ideal_end=ideal_end)


def arc(center, radius: float, start_angle: float, end_angle: float, *, id: int = 0,
        gamma: bool = True, kind: str = "euclidean_arc", ideal_start=False,
        ideal_end=False) -> BoundarySegment:
    """Circular arc traversed from ``start_angle`` to ``end_angle`` (radians, signed sweep)."""
    c = complex(as_complex(center))
    sweep = float(end_angle - start_angle)
    if sweep == 0 or radius <= 0:
        raise DomainError("degenerate arc")
    full = abs(abs(sweep) - 2 * np.pi) < 1e-14
    if abs(sweep) > 2 * np.pi + 1e-14:
        raise DomainError("arc sweep exceeds a full turn")
    za = c + radius * np.exp(1j * start_angle)
    zb = c + radius * np.exp(1j * end_angle)
    return BoundarySegment(id, kind, "circle" if full else "arc",
                           start=None if full else za, end=None if full else zb,
                           center=c, radius=float(radius), angle0=float(start_angle),
                           sweep=sweep, gamma_member=gamma, ideal_start=ideal_start,
                           ideal_end=ideal_end)


def line(point, direction, *, id: int = 0, gamma: bool = True) -> BoundarySegment:
    """Infinite line through ``point``; the domain lies to the left of ``direction``."""
    d = complex(as_complex(direction))
    return BoundarySegment(id, "line", "line", start=complex(as_complex(point)),
                           direction=d / abs(d), gamma_member=gamma)


def parametric(x_expr: str, y_expr: str, t0: float, t1: float, *, id: int = 0,
               gamma: bool = True, n_pieces: int = 256) -> list[BoundarySegment]:
    """A parametric curve ``t -> (x(t), y(t))`` sampled into straight pieces."""
    fx, fy = parse(x_expr, ("t",)), parse(y_expr, ("t",))
    t = np.linspace(t0, t1, n_pieces + 1)
    z = fx(t) + 1j * fy(t)
    if not np.all(np.isfinite(z)):
        raise DomainError("parametric curve is not finite on its parameter range")
    return [straight(z[i], z[i + 1], id=id, gamma=gamma, kind="parametric")
            for i in range(n_pieces) if z[i] != z[i + 1]]


@dataclass(frozen=True)
class DomainSpec:
    """A domain in a conformal model.

    ``bbox`` is ``(xmin, xmax, ymin, ymax)``; for unbounded domains it is a
    sampling window.  ``bounded`` is True when the chart closure of the domain
    is bounded (ideal polygons are chart-bounded but not metrically bounded).
    """

    model: ManifoldModel
    segments: tuple[BoundarySegment, ...]
    vertices: tuple[Vertex, ...] = ()
    bbox: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    bounded: bool = True
    name: str = "domain"
    _lines_only: bool = field(default=False, compare=False)

    def __post_init__(self):
        kinds = {s.shape == "line" for s in self.segments}
        if kinds == {True, False}:
            raise DomainError("infinite lines cannot be mixed with finite boundary pieces")
        object.__setattr__(self, "_lines_only", kinds == {True})
        if any(v.ideal for v in self.vertices):
            if self.model.kind == "euclidean":
                raise DomainError("ideal vertices need a negatively curved model")

    @property
    def ideal_vertices(self) -> list[complex]:
        return [v.point for v in self.vertices if v.ideal]

    @property
    def segment_ids(self) -> list[int]:
        return sorted({s.id for s in self.segments})

    @property
    def compact(self) -> bool:
        """Bounded chart closure strictly inside the chart and no ideal vertices."""
        if not self.bounded or self.ideal_vertices:
            return False
        if self.model.chart_radius is None:
            return True
        pts = self.boundary_points(64)
        return bool(np.all(np.abs(pts) < self.model.chart_radius * (1 - 1e-9)))

    def with_model(self, model: ManifoldModel, name: str | None = None) -> "DomainSpec":
        """The same chart region carrying a different conformal metric."""
        return replace(self, model=model, name=name or self.name)

    def boundary_points(self, per_segment: int = 64) -> np.ndarray:
        u = (np.arange(per_segment) + 0.5) / per_segment
        return np.concatenate([s.point_at(u) for s in self.segments if s.finite])

    def diameter_hint(self) -> float:
        """Metric diameter of the bbox window (infinite for ideal polygons)."""
        x0, x1, y0, y1 = self.bbox
        corners = np.array([x0 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1, x1 + 1j * y0])
        if self.model.chart_radius is not None and self.model.kind == "poincare_disk":
            if self.ideal_vertices:
                return np.inf
            pts = self.boundary_points(32)
            d = self.model.distance(pts[:, None], pts[None, :])
            return float(d.max())
        return float(max(abs(corners[0] - corners[1]), abs(corners[2] - corners[3])))

    def default_t_max(self) -> float:
        diam = self.diameter_hint()
        return 40.0 if not np.isfinite(diam) else max(40.0, 20.0 * diam)


# ---------------------------------------------------------------------------
# membership and chart distances
# ---------------------------------------------------------------------------

def _on_arc(x, a, m, b):
    """Is ``x`` (on the carrying circle) on the arc from ``a`` through ``m`` to ``b``?"""
    with np.errstate(over="ignore", invalid="ignore"):
        num = (x - a) * (m - b)
        den = (x - b) * (m - a)
        val = (num * np.conj(den)).real
        return val >= -MEMBER_TOL * np.abs(num) * np.abs(den)


def _chart_distance_to_segment(seg: BoundarySegment, z: np.ndarray) -> np.ndarray:
    if seg.shape == "straight":
        a, b = seg.start, seg.end
        d = b - a
        u = np.clip(((z - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return np.abs(z - (a + u * d))
    if seg.shape == "line":
        return np.abs(((z - seg.start) * np.conj(seg.direction)).imag)
    r = np.abs(z - seg.center)
    on_circle = np.abs(r - seg.radius)
    if seg.shape == "circle":
        return on_circle
    with np.errstate(invalid="ignore", divide="ignore"):
        foot = seg.center + seg.radius * (z - seg.center) / np.where(r > 0, r, 1.0)
    inside = _on_arc(foot, seg.start, seg.mid, seg.end) & (r > 0)
    ends = np.minimum(np.abs(z - seg.start), np.abs(z - seg.end))
    return np.where(inside, on_circle, ends)


def chart_distance(dom: DomainSpec, p, segments: Iterable[BoundarySegment] | None = None) -> np.ndarray:
    """Euclidean chart distance from points to the boundary."""
    z = np.asarray(as_complex(p), dtype=complex)
    segs = dom.segments if segments is None else segments
    out = np.full(z.shape, np.inf)
    for s in segs:
        out = np.minimum(out, _chart_distance_to_segment(s, z))
    return out


def _winding(dom: DomainSpec, z: np.ndarray) -> np.ndarray:
    total = np.zeros(z.shape)
    for s in dom.segments:
        if s.shape == "straight":
            with np.errstate(invalid="ignore", divide="ignore"):
                total += np.angle((s.end - z) / (s.start - z))
            continue
        n_sub = max(1, int(np.ceil(abs(s.sweep) / (np.pi / 2))))
        for k in range(n_sub):
            t0 = s.angle0 + s.sweep * k / n_sub
            t1 = s.angle0 + s.sweep * (k + 1) / n_sub
            a = s.center + s.radius * np.exp(1j * t0)
            b = s.center + s.radius * np.exp(1j * t1)
            m = s.center + s.radius * np.exp(0.5j * (t0 + t1))
            chord = b - a
            side_z = (np.conj(chord) * (z - a)).imag
            side_m = (np.conj(chord) * (m - a)).imag
            inside = np.abs(z - s.center) < s.radius
            with np.errstate(invalid="ignore", divide="ignore"):
                direct = np.angle((b - z) / (a - z))
                # near the chord the direct angle is close to +-pi; split at the arc midpoint instead
                split = np.angle((m - z) / (a - z)) + np.angle((b - z) / (m - z))
            near = inside & (np.abs(side_z) < 1e-6 * abs(chord) ** 2)
            total += np.where(near, split, direct)
            in_cap = inside & ~near & (side_z * side_m > 0)
            total += np.where(in_cap, 2 * np.pi * np.sign(s.sweep), 0.0)
    return np.rint(np.nan_to_num(total) / (2 * np.pi)).astype(int)


def contains(dom: DomainSpec, p) -> np.ndarray | bool:
    """True for points of the open domain; boundary points are excluded."""
    z = np.asarray(as_complex(p), dtype=complex)
    ok = dom.model.in_chart(z)
    if dom._lines_only:
        for s in dom.segments:
            ok &= ((z - s.start) * np.conj(s.direction)).imag > 0
    else:
        ok &= (_winding(dom, z) % 2) == 1
    ok &= chart_distance(dom, z) > ON_BOUNDARY_TOL * np.maximum(1.0, np.abs(z))
    return bool(ok) if ok.ndim == 0 else ok


# ---------------------------------------------------------------------------
# closed-form frames
# ---------------------------------------------------------------------------

def _frame_inverse(model: ManifoldModel, p: np.ndarray):
    """Entries of the Moebius matrix mapping the frame of ``p`` back to the chart."""
    one = np.ones(p.shape, dtype=complex)
    if model.kind == "euclidean":
        return one, p, np.zeros(p.shape, dtype=complex), one
    return one, p, np.conj(p), one


def _to_frame(model: ManifoldModel, p, z):
    if model.kind == "euclidean":
        return z - p
    return (z - p) / (1.0 - np.conj(p) * z)


def from_frame(model: ManifoldModel, p, w):
    if model.kind == "euclidean":
        return w + p
    return (w + p) / (1.0 + np.conj(p) * w)


def _frame_coeffs(seg: BoundarySegment, n11, n12, n21, n22):
    A, B, C = seg.coeffs
    Bc = np.conj(B)
    r1 = A * n11 + B * n21
    r2 = Bc * n11 + C * n21
    s1 = A * n12 + B * n22
    s2 = Bc * n12 + C * n22
    A2 = (np.conj(n11) * r1 + np.conj(n21) * r2).real
    B2 = np.conj(n11) * s1 + np.conj(n21) * s2
    C2 = (np.conj(n12) * s1 + np.conj(n22) * s2).real
    return A2, B2, C2


@dataclass
class _Frame:
    """A boundary piece expressed in the frames of many base points."""

    seg: BoundarySegment
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    a: Optional[np.ndarray]
    m: Optional[np.ndarray]
    b: Optional[np.ndarray]

    def member(self, w):
        if self.a is None:
            return np.ones(np.shape(w), dtype=bool)
        return _on_arc(w, self.a, self.m, self.b)


def _frames(dom: DomainSpec, p: np.ndarray, segments=None) -> list[_Frame]:
    model = dom.model
    n = _frame_inverse(model, p)
    out = []
    for s in dom.segments if segments is None else segments:
        A, B, C = _frame_coeffs(s, *n)
        if s.finite and s.shape != "circle":
            a = _to_frame(model, p, s.start)
            b = _to_frame(model, p, s.end)
            m = _to_frame(model, p, s.mid)
        else:
            a = m = b = None
        out.append(_Frame(s, A, B, C, a, m, b))
    return out


def _circle_roots(A, beta, C):
    """Real roots of ``A s^2 + 2 beta s + C = 0`` (NaN where absent)."""
    disc = beta * beta - A * C
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    q = -(beta + np.where(beta >= 0, 1.0, -1.0) * sq)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s1 = np.where(q != 0, C / q, np.where(C == 0, 0.0, np.nan))
        s2 = np.where(A != 0, q / np.where(A != 0, A, 1.0), np.nan)
    s1 = np.where(ok, s1, np.nan)
    s2 = np.where(ok, s2, np.nan)
    return s1, s2


@dataclass
class Casts:
    """Forward/backward first hits for a batch of rays (metric times)."""

    t_fwd: np.ndarray
    t_bwd: np.ndarray
    seg_fwd: np.ndarray
    seg_bwd: np.ndarray
    pt_fwd: np.ndarray
    pt_bwd: np.ndarray
    capped_fwd: np.ndarray
    capped_bwd: np.ndarray

    @property
    def two_sided(self) -> np.ndarray:
        return np.minimum(self.t_fwd, self.t_bwd)

    @property
    def chord(self) -> np.ndarray:
        return self.t_fwd + self.t_bwd


def _closed_form_cast(dom: DomainSpec, p, theta, t_max, gamma_only, exclude_zero=False) -> Casts:
    model = dom.model
    p, theta = np.broadcast_arrays(np.asarray(p, complex), np.asarray(theta, float))
    p = p.ravel()
    theta = theta.ravel()
    e = np.exp(1j * theta)
    N = p.size
    s_f = np.full(N, np.inf)
    s_b = np.full(N, np.inf)
    id_f = np.full(N, -1)
    id_b = np.full(N, -1)
    segs = [s for s in dom.segments if s.gamma_member or not gamma_only]
    s_lim = 1.0 if model.kind == "poincare_disk" else np.inf
    tiny = 1e-12 if exclude_zero else 0.0
    for fr in _frames(dom, p, segs):
        beta = (np.conj(fr.B) * e).real
        for s in _circle_roots(fr.A, beta, fr.C):
            valid = np.isfinite(s) & (np.abs(s) < s_lim) & (np.abs(s) > tiny)
            w = np.where(valid, s, 0.0) * e
            valid &= fr.member(w)
            fwd = valid & (s > 0) & (s < s_f)
            s_f = np.where(fwd, s, s_f)
            id_f = np.where(fwd, fr.seg.id, id_f)
            bwd = valid & (s < 0) & (-s < s_b)
            s_b = np.where(bwd, -s, s_b)
            id_b = np.where(bwd, fr.seg.id, id_b)
    t_f = model.frame_time(np.where(np.isfinite(s_f), s_f, 0.0))
    t_b = model.frame_time(np.where(np.isfinite(s_b), s_b, 0.0))
    t_f = np.where(np.isfinite(s_f), t_f, np.inf)
    t_b = np.where(np.isfinite(s_b), t_b, np.inf)
    # a geodesic of the euclidean plane never ends; Poincare geodesics reach the ideal boundary
    never_ends = model.kind == "euclidean"
    cap_f = (t_f > t_max) & (np.isfinite(t_f) | never_ends)
    cap_b = (t_b > t_max) & (np.isfinite(t_b) | never_ends)
    t_f = np.where(t_f > t_max, np.inf, t_f)
    t_b = np.where(t_b > t_max, np.inf, t_b)
    id_f = np.where(np.isfinite(t_f), id_f, -1)
    id_b = np.where(np.isfinite(t_b), id_b, -1)
    pt_f = np.where(np.isfinite(t_f), from_frame(model, p, np.where(np.isfinite(s_f), s_f, 0) * e), np.nan)
    pt_b = np.where(np.isfinite(t_b), from_frame(model, p, -np.where(np.isfinite(s_b), s_b, 0) * e), np.nan)
    return Casts(t_f, t_b, id_f, id_b, pt_f, pt_b, cap_f, cap_b)


def _circle_value(seg: BoundarySegment, z):
    A, B, C = seg.coeffs
    return A * np.abs(z) ** 2 + 2 * (np.conj(B) * z).real + C


def _numeric_forward(dom: DomainSpec, p, theta, t_max, gamma_only, bisect_tol=1e-10):
    model = dom.model
    p = np.asarray(p, complex).ravel()
    theta = np.asarray(theta, float).ravel()
    v0 = np.exp(1j * theta) / model.lam(p)
    segs = [s for s in dom.segments if s.gamma_member or not gamma_only]
    N = p.size
    t_hit = np.full(N, np.inf)
    seg_hit = np.full(N, -1)
    pt_hit = np.full(N, np.nan, dtype=complex)
    batch = GeodesicBatch(model, p, v0, t_max, h0=0.02, h_max=0.25)
    vals_prev = {id(s): _circle_value(s, p) for s in segs}
    while batch.active.any():
        acc, t_prev, y_prev, h = batch.advance()
        if acc.size == 0:
            continue
        z_new = batch.y[acc, 0]
        best_tau = np.full(acc.size, np.inf)
        best_seg = np.full(acc.size, -1)
        best_pt = np.full(acc.size, np.nan, dtype=complex)
        for s in segs:
            f0 = vals_prev[id(s)][acc]
            f1 = _circle_value(s, z_new)
            vals_prev[id(s)][acc] = f1
            cross = (f0 * f1 < 0) | ((f1 == 0) & (f0 != 0))
            if not cross.any():
                continue
            k = np.flatnonzero(cross)
            lo = np.zeros(k.size)
            hi = h[k].copy()
            y0 = y_prev[k]
            sgn0 = np.sign(f0[k])
            while np.max(hi - lo) > bisect_tol:
                mid = 0.5 * (lo + hi)
                ym, _ = dp_step(model, y0, mid)
                same = np.sign(_circle_value(s, ym[:, 0])) == sgn0
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            ym, _ = dp_step(model, y0, hi)
            zc = ym[:, 0]
            if s.finite and s.shape != "circle":
                onit = _on_arc(zc, s.start, s.mid, s.end) | (
                    np.minimum(np.abs(zc - s.start), np.abs(zc - s.end)) < 1e-9)
            else:
                onit = np.ones(k.size, dtype=bool)
            better = onit & (hi < best_tau[k])
            best_tau[k[better]] = hi[better]
            best_seg[k[better]] = s.id
            best_pt[k[better]] = zc[better]
        got = np.isfinite(best_tau)
        rows = acc[got]
        t_hit[rows] = t_prev[got] + best_tau[got]
        seg_hit[rows] = best_seg[got]
        pt_hit[rows] = best_pt[got]
        batch.active[rows] = False
    capped = ~np.isfinite(t_hit) & ~batch.early
    return t_hit, seg_hit, pt_hit, capped


def cast_rays(dom: DomainSpec, p, theta, t_max: float | None = None, gamma_only: bool = False,
              method: str = "auto") -> Casts:
    """First boundary hits of the geodesics through ``p`` at angle ``theta``, both ways.

    ``p`` and ``theta`` broadcast against each other.  Hits later than
    ``t_max`` are reported as infinite and flagged ``capped``.
    """
    t_max = dom.default_t_max() if t_max is None else float(t_max)
    if method == "auto":
        method = "closed" if dom.model.closed_form else "trace"
    if method == "closed":
        return _closed_form_cast(dom, p, theta, t_max, gamma_only)
    p, theta = np.broadcast_arrays(np.asarray(p, complex), np.asarray(theta, float))
    p, theta = p.ravel(), theta.ravel()
    tf, sf, pf, cf = _numeric_forward(dom, p, theta, t_max, gamma_only)
    tb, sb, pb, cb = _numeric_forward(dom, p, theta + np.pi, t_max, gamma_only)
    return Casts(tf, tb, sf, sb, pf, pb, cf, cb)


@dataclass
class RayHit:
    """First-exit data ``r_p(v)``: a metric time or ``INFINITE``."""

    hit_time: float
    segment_id: Optional[int]
    hit_point: Optional[tuple[float, float]]
    capped: bool

    @property
    def infinite(self) -> bool:
        return not np.isfinite(self.hit_time)


def _require_interior(dom: DomainSpec, z):
    if not np.all(contains(dom, z)):
        raise DomainError("query point is not an interior point of the domain")


def hitting_radius(dom: DomainSpec, p, theta: float, t_max: float | None = None,
                   gamma_only: bool = False, method: str = "auto") -> RayHit:
    """Two-sided hitting radius: the smaller of the forward and backward first hits."""
    z = complex(as_complex(p))
    _require_interior(dom, z)
    c = cast_rays(dom, z, theta, t_max, gamma_only, method)
    fwd = c.t_fwd[0] <= c.t_bwd[0]
    t = float(min(c.t_fwd[0], c.t_bwd[0]))
    if not np.isfinite(t):
        return RayHit(INFINITE, None, None, bool(c.capped_fwd[0] or c.capped_bwd[0]))
    seg = int(c.seg_fwd[0] if fwd else c.seg_bwd[0])
    pt = complex(c.pt_fwd[0] if fwd else c.pt_bwd[0])
    return RayHit(t, seg, (pt.real, pt.imag), False)


def one_sided_hits(dom: DomainSpec, p, theta, t_max: float | None = None,
                   gamma_only: bool = False, method: str = "auto") -> np.ndarray:
    """Forward first-hit times only (used for cones and boundary distance)."""
    if method == "auto":
        method = "closed" if dom.model.closed_form else "trace"
    t_max = dom.default_t_max() if t_max is None else float(t_max)
    if method == "closed":
        return _closed_form_cast(dom, p, theta, t_max, gamma_only).t_fwd
    p, theta = np.broadcast_arrays(np.asarray(p, complex), np.asarray(theta, float))
    return _numeric_forward(dom, p.ravel(), theta.ravel(), t_max, gamma_only)[0]


# ---------------------------------------------------------------------------
# boundary distance
# ---------------------------------------------------------------------------

def _frame_nearest(fr: _Frame) -> np.ndarray:
    """Euclidean distance from the frame origin to the piece."""
    A, B, C = fr.A, fr.B, fr.C
    absB = np.abs(B)
    disc = np.sqrt(np.maximum(absB**2 - A * C, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(C) / (absB + disc)
        u = np.where(absB > 0, -np.sign(C) * B / np.where(absB > 0, absB, 1.0), 1.0)
    foot = r * u
    if fr.a is None:
        return r
    centred = absB == 0  # circle centred at the origin: every point is nearest
    hit = fr.member(foot) | centred
    ends = np.minimum(np.abs(fr.a), np.abs(fr.b))
    return np.where(hit, r, ends)


def boundary_distance(dom: DomainSpec, p, n_dirs: int = 256) -> float | np.ndarray:
    """Metric distance from interior points to the boundary.

    Closed-form models use the nearest point of each boundary piece in the
    frame of ``p`` (distance from the origin is monotone in the chart radius
    there).  Custom models minimise the one-sided hit time over directions:
    a distance-realising curve is a geodesic leaving ``p``.
    """
    z = np.asarray(as_complex(p), dtype=complex)
    _require_interior(dom, z)
    shape = z.shape
    z = z.ravel()
    if dom.model.closed_form:
        r = np.full(z.shape, np.inf)
        for fr in _frames(dom, z):
            r = np.minimum(r, _frame_nearest(fr))
        out = dom.model.frame_time(r)
    else:
        out = np.array([_shooting_boundary_distance(dom, zi, n_dirs) for zi in z])
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def _shooting_boundary_distance(dom: DomainSpec, z: complex, n_dirs: int) -> float:
    from scipy.optimize import minimize_scalar

    th = 2 * np.pi * np.arange(n_dirs) / n_dirs
    t = one_sided_hits(dom, z, th)
    k = int(np.argmin(t))
    width = 2 * np.pi / n_dirs
    f = lambda a: float(one_sided_hits(dom, z, a)[0])  # noqa: E731
    res = minimize_scalar(f, bracket=(th[k] - width, th[k], th[k] + width)) \
        if f(th[k] - width) > t[k] < f(th[k] + width) else None
    return float(min(t[k], res.fun)) if res is not None else float(t[k])


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _geodesic_piece(model: ManifoldModel, u: complex, v: complex, id: int, gamma: bool,
                    iu: bool, iv: bool) -> BoundarySegment:
    if model.kind == "euclidean":
        return straight(u, v, id=id, gamma=gamma)
    if model.kind != "poincare_disk":
        raise DomainError("geodesic polygons need a closed-form model; use with_model() for custom metrics")
    cross = (u * np.conj(v)).imag
    if abs(cross) < 1e-14 * max(1.0, abs(u) * abs(v)):
        return straight(u, v, id=id, gamma=gamma, kind="geodesic_arc", ideal_start=iu, ideal_end=iv)
    # circle orthogonal to the unit circle through u and v
    M = 2 * np.array([[u.real, u.imag], [v.real, v.imag]])
    rhs = np.array([1 + abs(u) ** 2, 1 + abs(v) ** 2])
    cx, cy = np.linalg.solve(M, rhs)
    c = complex(cx, cy)
    R = float(np.sqrt(abs(c) ** 2 - 1.0))
    a0 = float(np.angle(u - c))
    a1 = float(np.angle(v - c))
    sweep = (a1 - a0 + np.pi) % (2 * np.pi) - np.pi
    return arc(c, R, a0, a0 + sweep, id=id, gamma=gamma, kind="geodesic_arc",
               ideal_start=iu, ideal_end=iv)


def _polyline(segments: Sequence[BoundarySegment], per: int = 64) -> np.ndarray:
    u = np.arange(per) / per
    return np.concatenate([s.point_at(u) for s in segments])


def _segments_intersect(p: np.ndarray) -> bool:
    """Does the closed polyline ``p`` self-intersect (non-adjacent edges)?"""
    a = p
    b = np.roll(p, -1)
    n = len(p)
    d = b - a
    for i in range(n):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        cr = lambda x, y: (np.conj(x) * y).imag  # noqa: E731
        d1 = cr(d[i], a[j] - a[i])
        d2 = cr(d[i], b[j] - a[i])
        d3 = cr(d[j], a[i] - a[j])
        d4 = cr(d[j], b[i] - a[j])
        # touching counts as crossing; fully collinear pairs do not
        if np.any((d1 * d2 <= 0) & (d3 * d4 <= 0) & ~((d1 == 0) & (d2 == 0))):
            return True
    return False


def _bbox(points: np.ndarray, margin: float = 0.0):
    return (float(points.real.min() - margin), float(points.real.max() + margin),
            float(points.imag.min() - margin), float(points.imag.max() + margin))


def build_geodesic_polygon(model: ManifoldModel, vertices: Sequence, gamma_mask: Sequence[bool] | None = None,
                           name: str = "polygon") -> DomainSpec:
    """Polygon bounded by the geodesic arcs joining consecutive vertices.

    Vertices are chart points or :class:`IdealPoint` instances.  Side ``i``
    joins vertex ``i`` to vertex ``i+1``; ``gamma_mask[i]`` is its
    Dirichlet-set membership.
    """
    if len(vertices) < 3:
        raise DomainError("a polygon needs at least three vertices")
    pts, flags = [], []
    for v in vertices:
        if isinstance(v, IdealPoint):
            if model.kind == "euclidean":
                raise DomainError("ideal vertex on a flat model")
            pts.append(v.z)
            flags.append(True)
        else:
            z = complex(as_complex(v))
            if not model.in_chart(z):
                raise DomainError(f"vertex {z} outside the chart")
            pts.append(z)
            flags.append(False)
    k = len(pts)
    gamma = [True] * k if gamma_mask is None else [bool(g) for g in gamma_mask]
    if len(gamma) != k:
        raise DomainError("gamma_mask needs one flag per side")
    for i in range(k):
        if abs(pts[i] - pts[(i + 1) % k]) < 1e-14:
            raise DomainError("consecutive vertices coincide")
    segs = [_geodesic_piece(model, pts[i], pts[(i + 1) % k], i, gamma[i], flags[i], flags[(i + 1) % k])
            for i in range(k)]
    poly = _polyline(segs)
    area = 0.5 * np.sum((np.conj(poly) * np.roll(poly, -1)).imag)
    if area < 0:
        segs = [s.flipped() for s in reversed(segs)]
        pts, flags = pts[::-1], flags[::-1]
        poly = _polyline(segs)
    if _segments_intersect(poly):
        raise DomainError("polygon boundary self-intersects")
    verts = tuple(Vertex(z, f) for z, f in zip(pts, flags))
    return DomainSpec(model, tuple(segs), verts, _bbox(poly), True, name)


def from_segments(model: ManifoldModel, segments: Sequence[BoundarySegment], vertices=(),
                  bbox=None, bounded: bool = True, name: str = "domain") -> DomainSpec:
    """Domain from explicit, left-oriented boundary pieces."""
    segs = tuple(segments)
    if bbox is None:
        if any(s.shape == "line" for s in segs):
            raise DomainError("domains bounded by infinite lines need an explicit bbox window")
        bbox = _bbox(_polyline(segs))
    verts = tuple(v if isinstance(v, Vertex) else Vertex(complex(as_complex(v))) for v in vertices)
    return DomainSpec(model, segs, verts, tuple(map(float, bbox)), bounded, name)


def disk(center=(0.0, 0.0), radius: float = 1.0, model: ManifoldModel | None = None,
         gamma: bool = True) -> DomainSpec:
    """Chart disk (a euclidean ball in the euclidean model)."""
    model = model or ManifoldModel.euclidean()
    c = complex(as_complex(center))
    seg = arc(c, radius, 0.0, 2 * np.pi, id=0, gamma=gamma)
    bb = (c.real - radius, c.real + radius, c.imag - radius, c.imag + radius)
    return DomainSpec(model, (seg,), (), bb, True, "disk")


def geodesic_ball(model: ManifoldModel, center=(0.0, 0.0), radius: float = 1.0) -> DomainSpec:
    """Metric ball; in the Poincare model its chart image is a euclidean disk."""
    c = complex(as_complex(center))
    if model.kind == "euclidean":
        return disk(c, radius, model)
    if model.kind != "poincare_disk":
        raise DomainError("geodesic balls need a closed-form model")
    rho = float(model.frame_radius(radius))
    w = rho * np.exp(2j * np.pi * np.arange(3) / 3)
    z = from_frame(model, c, w)
    # circumcircle of three image points
    a, b, d = z
    M = 2 * np.array([[b.real - a.real, b.imag - a.imag], [d.real - a.real, d.imag - a.imag]])
    rhs = np.array([abs(b) ** 2 - abs(a) ** 2, abs(d) ** 2 - abs(a) ** 2])
    cx, cy = np.linalg.solve(M, rhs)
    cc = complex(cx, cy)
    dom = disk(cc, float(abs(a - cc)), model)
    return replace(dom, name="geodesic_ball")


def rectangle(x0: float, x1: float, y0: float, y1: float, gamma: Sequence[bool] | None = None,
              model: ManifoldModel | None = None) -> DomainSpec:
    """Axis-parallel rectangle; sides in order bottom, right, top, left."""
    model = model or ManifoldModel.euclidean()
    dom = build_geodesic_polygon(model, [(x0, y0), (x1, y0), (x1, y1), (x0, y1)], gamma, name="rectangle")
    return replace(dom, bbox=(x0, x1, y0, y1))


def unit_square(gamma: Sequence[bool] | None = None) -> DomainSpec:
    return replace(rectangle(0.0, 1.0, 0.0, 1.0, gamma), name="unit_square")


def half_plane(window: tuple[float, float, float, float] = (0.0, 4.0, -2.0, 2.0)) -> DomainSpec:
    """Euclidean half-plane ``x > 0``; ``window`` is the sampling bbox."""
    seg = line((0.0, 0.0), (0.0, -1.0), id=0)
    return DomainSpec(ManifoldModel.euclidean(), (seg,), (), window, False, "half_plane")


def strip(width: float = 1.0, window_height: float = 4.0) -> DomainSpec:
    """Euclidean strip ``0 < x < width``."""
    segs = (line((0.0, 0.0), (0.0, -1.0), id=0), line((width, 0.0), (0.0, 1.0), id=1))
    h = window_height / 2
    return DomainSpec(ManifoldModel.euclidean(), segs, (), (0.0, width, -h, h), False, "strip")


def ideal_triangle(model: ManifoldModel | None = None, angles_deg=(90.0, 210.0, 330.0)) -> DomainSpec:
    model = model or ManifoldModel.poincare()
    return build_geodesic_polygon(model, [ideal(a) for a in angles_deg], name="ideal_triangle")


def horn_domain(outer_radius: float = 3.0) -> DomainSpec:
    """Disk with a horn-shaped hole whose tip is an inward cusp at the origin.

    The hole lies between the circles ``|z - i| = 1`` and ``|z - i/2| = 1/2``
    (tangent at 0) on the side ``x > 0``.
    """
    outer = arc(0j, outer_radius, 0.0, 2 * np.pi, id=0)
    big = arc(1j, 1.0, np.pi / 2, -np.pi / 2, id=1)       # from 2i down the right side to 0
    small = arc(0.5j, 0.5, -np.pi / 2, np.pi / 2, id=2)   # from 0 up to i
    cap = straight(1j, 2j, id=3)
    segs = (outer, big, small, cap)
    verts = (Vertex(0j), Vertex(1j), Vertex(2j))
    r = outer_radius
    return DomainSpec(ManifoldModel.euclidean(), segs, verts, (-r, r, -r, r), True, "horn")
