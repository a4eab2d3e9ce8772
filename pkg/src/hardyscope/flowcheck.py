"""Monte Carlo check of Santalo's formula on compact domains.

Integrating a function over the unit tangent bundle with the Liouville
measure must agree with integrating it along exit orbits started from inward
boundary vectors, weighted by ``g(N, u)``:

    int_{SOmega} F dmu_L = int_{dOmega} int_{-pi/2}^{pi/2} cos(psi) int_0^{l(u)} F(phi^t u) dt dpsi ds.

Both sides are estimated independently and compared.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .domain import DomainError, DomainSpec, _closed_form_cast, contains, from_frame

GAUSS_NODES = 16
BATCH = 100_000


@dataclass
class Integrand:
    """``F(x, y, theta)`` on unit tangent vectors; ``theta`` is the chart angle of the velocity."""

    f: Callable
    name: str = "F"

    def __call__(self, x, y, theta):
        return np.broadcast_to(np.asarray(self.f(x, y, theta), dtype=float), np.shape(x))

    @classmethod
    def constant(cls, c: float = 1.0) -> "Integrand":
        return cls(lambda x, y, th: np.full(np.shape(x), float(c)), f"const({c:g})")

    @classmethod
    def basepoint(cls, f: Callable, name: str = "f(p)") -> "Integrand":
        return cls(lambda x, y, th: f(x, y), name)


@dataclass
class BoundaryFiberSample:
    """Inward unit vectors at boundary points with their exit data (arrays of equal length)."""

    boundary_point: np.ndarray
    inward_angle: np.ndarray
    cosine: np.ndarray
    exit_time: np.ndarray
    metric_speed: np.ndarray  # lam at the boundary point: metric length per chart length


@dataclass
class SantaloReport:
    lhs: float
    rhs: float
    stderr_lhs: float
    stderr_rhs: float
    n_samples: int
    seed: int
    integrand: str = "F"
    n_critical: int = 0

    @property
    def z_score(self) -> float:
        return abs(self.lhs - self.rhs) / np.hypot(self.stderr_lhs, self.stderr_rhs)

    @property
    def agree(self) -> bool:
        return bool(self.z_score <= 3.0)

    def to_json(self) -> str:
        d = asdict(self)
        d["z_score"] = self.z_score
        d["agree"] = self.agree
        return json.dumps(d, indent=2, sort_keys=True)


def _require_compact(dom: DomainSpec):
    if not dom.compact:
        raise DomainError("Santalo comparison needs a compact domain")
    if not dom.model.closed_form:
        raise DomainError("Santalo comparison needs a model with closed-form geodesics")


def _generator(seed: int) -> np.random.Generator:
    # counter-based stream fully determined by the seed
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _segment_weights(dom: DomainSpec):
    segs = [s for s in dom.segments if s.finite]
    lengths = np.array([s.chart_length() for s in segs])
    return segs, lengths


def sample_boundary_fibers(dom: DomainSpec, n: int, rng: np.random.Generator) -> BoundaryFiberSample:
    """Boundary points uniform in chart arclength, inward angles uniform on ``(-pi/2, pi/2)``."""
    segs, lengths = _segment_weights(dom)
    which = rng.choice(len(segs), size=n, p=lengths / lengths.sum())
    u = rng.uniform(size=n)
    psi = rng.uniform(-np.pi / 2, np.pi / 2, size=n)
    q = np.empty(n, complex)
    tangent = np.empty(n, complex)
    for k, s in enumerate(segs):
        sel = which == k
        q[sel] = s.point_at(u[sel])
        tangent[sel] = s.tangent_at(u[sel])
    normal = 1j * tangent / np.abs(tangent)
    step = 1e-7 * np.maximum(1.0, np.abs(q))
    flip = ~contains(dom, q + step * normal)
    normal = np.where(flip, -normal, normal)
    theta = np.angle(normal) + psi
    casts = _closed_form_cast(dom, q, theta, np.inf, False, exclude_zero=True)
    return BoundaryFiberSample(q, theta, np.cos(psi), casts.t_fwd, dom.model.lam(q))


def _orbit_points(dom: DomainSpec, q, theta, t):
    """Chart points and velocity angles at metric times ``t`` along geodesics from ``q``."""
    model = dom.model
    e = np.exp(1j * theta)
    w = model.frame_radius(t) * e
    z = from_frame(model, q, w)
    if model.kind == "euclidean":
        return z, np.broadcast_to(theta, z.shape)
    deriv = (1 - np.abs(q) ** 2) / (1 + np.conj(q) * w) ** 2
    return z, np.angle(deriv * e)


def _orbit_integral(dom: DomainSpec, F: Integrand, q, theta, length) -> np.ndarray:
    x, wts = np.polynomial.legendre.leggauss(GAUSS_NODES)
    t = 0.5 * length[:, None] * (x[None, :] + 1)
    z, ang = _orbit_points(dom, q[:, None], theta[:, None], t)
    vals = F(z.real, z.imag, ang)
    return 0.5 * length * (vals @ wts)


class _Moments:
    """Running mean and sum of squared deviations, merged batch by batch in a fixed order."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x: np.ndarray):
        nb, mb = x.size, float(np.mean(x))
        m2b = float(np.sum((x - mb) ** 2))
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta**2 * self.n * nb / n
        self.n = n

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.m2 / (self.n - 1) / self.n))


def santalo_compare(dom: DomainSpec, integrand: Integrand, n_samples: int = 1_000_000,
                    seed: int = 0) -> SantaloReport:
    """Liouville integral of ``integrand`` against its boundary-fiber representation.

    Phase-space side: basepoints uniform in the bbox weighted by
    ``1_Omega lam^2`` and directions uniform, times ``area(bbox) 2 pi``.
    Boundary side: points uniform in chart arclength weighted by ``lam``,
    inward angles uniform, each contributing ``pi cos(psi) int_0^l F dt``.
    Samples are drawn in batches and summed in a fixed order.
    """
    _require_compact(dom)
    rng = _generator(seed)
    x0, x1, y0, y1 = dom.bbox
    box = (x1 - x0) * (y1 - y0)
    _, lengths = _segment_weights(dom)
    total_len = lengths.sum()
    acc_l, acc_r = _Moments(), _Moments()
    n_critical = 0
    verts = np.array([v.point for v in dom.vertices if not v.ideal], complex)
    done = 0
    while done < n_samples:
        m = min(BATCH, n_samples - done)
        z = rng.uniform(x0, x1, m) + 1j * rng.uniform(y0, y1, m)
        th = rng.uniform(0, 2 * np.pi, m)
        inside = contains(dom, z)
        val = np.zeros(m)
        zi = z[inside]
        val[inside] = dom.model.lam(zi) ** 2 * integrand(zi.real, zi.imag, th[inside])
        acc_l.add(val * box * 2 * np.pi)

        fib = sample_boundary_fibers(dom, m, rng)
        if verts.size:
            n_critical += int(np.sum(np.min(np.abs(fib.boundary_point[:, None] - verts), axis=1) < 1e-12))
        length = np.where(np.isfinite(fib.exit_time), fib.exit_time, 0.0)
        orbit = _orbit_integral(dom, integrand, fib.boundary_point, fib.inward_angle, length)
        acc_r.add(total_len * fib.metric_speed * np.pi * fib.cosine * orbit)
        done += m
    return SantaloReport(acc_l.mean, acc_r.mean, acc_l.stderr, acc_r.stderr, int(n_samples), int(seed),
                         integrand.name, n_critical)
