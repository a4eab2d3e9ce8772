"""Two-dimensional conformal Riemannian models and their geodesics.

Every model is a metric ``g = lam(p)**2 * (dx**2 + dy**2)`` on an open chart of
the plane.  Points are handled internally as complex numbers ``x + iy``;
public functions also accept ``(x, y)`` pairs and ``(..., 2)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expr import Expression, parse

CHART_EPS = 1e-12
# integration halts this close to the chart edge: beyond it rounding in 1 - |z|^2 swamps the step control
EDGE_STOP = 1e-9
GRAD_STEP = 1e-6


class ChartError(ValueError):
    """A point lies outside the chart of the model."""


class StencilError(ValueError):
    """A finite-difference stencil does not fit inside the chart."""


def as_complex(p) -> np.ndarray | complex:
    """Convert ``(x, y)``, an ``(..., 2)`` array or complex input to complex."""
    if isinstance(p, (complex, np.complexfloating)):
        return complex(p)
    if isinstance(p, (int, float, np.integer, np.floating)):
        return complex(p)
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        return arr if arr.ndim else complex(arr)
    arr = arr.astype(float)
    if arr.shape[-1:] != (2,):
        raise ValueError(f"expected points with trailing dimension 2, got shape {arr.shape}")
    z = arr[..., 0] + 1j * arr[..., 1]
    return z if z.ndim else complex(z)


def as_xy(z) -> np.ndarray:
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


@dataclass(frozen=True)
class ManifoldModel:
    """A conformal model ``g = lam**2 * euclidean``.

    ``kind`` is ``"euclidean"``, ``"poincare_disk"`` (curvature ``-b``) or
    ``"custom_conformal"`` (``lam`` given as an expression in ``x, y``).
    ``chart_radius`` is ``None`` for the whole plane, otherwise the chart is
    the open disk of that radius about the origin.
    """

    kind: str = "euclidean"
    b: float = 1.0
    expression: Optional[Expression] = field(default=None, compare=False)
    chart_radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "poincare_disk", "custom_conformal"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "poincare_disk":
            if not self.b > 0:
                raise ValueError("poincare_disk needs curvature magnitude b > 0")
            object.__setattr__(self, "chart_radius", 1.0)
        if self.kind == "custom_conformal" and self.expression is None:
            raise ValueError("custom_conformal needs a lambda expression")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def euclidean(cls) -> "ManifoldModel":
        return cls("euclidean")

    @classmethod
    def poincare(cls, b: float = 1.0) -> "ManifoldModel":
        return cls("poincare_disk", b=float(b))

    @classmethod
    def custom(cls, lam: str | Expression, chart_radius: Optional[float] = None) -> "ManifoldModel":
        expr = lam if isinstance(lam, Expression) else parse(lam)
        return cls("custom_conformal", expression=expr, chart_radius=chart_radius)

    @property
    def closed_form(self) -> bool:
        """True when geodesics and distances are available in closed form."""
        return self.kind in ("euclidean", "poincare_disk")

    @property
    def scale(self) -> float:
        """Metric length of a unit euclidean chart displacement at the origin, up to O(1)."""
        return 2.0 / np.sqrt(self.b) if self.kind == "poincare_disk" else 1.0

    # -- pointwise quantities -------------------------------------------------
    def in_chart(self, z) -> np.ndarray:
        z = np.asarray(z)
        finite = np.isfinite(z)
        if self.chart_radius is None:
            return finite
        return finite & (np.abs(z) < self.chart_radius * (1.0 - CHART_EPS))

    def lam(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "euclidean":
            return np.ones(z.shape)
        if self.kind == "poincare_disk":
            return (2.0 / np.sqrt(self.b)) / (1.0 - (z.real**2 + z.imag**2))
        return self.expression(z.real, z.imag)

    def grad_log_lam(self, z) -> np.ndarray:
        """Gradient of ``log lam`` packed as a complex number ``d/dx + i d/dy``."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "euclidean":
            return np.zeros(z.shape, dtype=complex)
        if self.kind == "poincare_disk":
            return 2.0 * z / (1.0 - (z.real**2 + z.imag**2))
        h = GRAD_STEP
        ll = lambda w: np.log(self.expression(w.real, w.imag))  # noqa: E731
        gx = (ll(z + h) - ll(z - h)) / (2 * h)
        gy = (ll(z + 1j * h) - ll(z - 1j * h)) / (2 * h)
        return gx + 1j * gy

    # -- closed-form geometry -------------------------------------------------
    def to_origin(self, p: complex):
        """Isometry moving ``p`` to the origin as a 2x2 Moebius matrix.

        The derivative at ``p`` is a positive real number, so tangent angles
        at ``p`` are preserved.
        """
        if self.kind == "euclidean":
            return np.array([[1.0, -p], [0.0, 1.0]], dtype=complex)
        if self.kind == "poincare_disk":
            return np.array([[1.0, -p], [-np.conj(p), 1.0]], dtype=complex)
        raise NotImplementedError("no closed-form isometries for custom models")

    def frame_time(self, s) -> np.ndarray:
        """Metric length of the geodesic from 0 to the chart point ``s`` on a ray through the origin."""
        s = np.abs(np.asarray(s, dtype=float))
        if self.kind == "euclidean":
            return s
        if self.kind == "poincare_disk":
            with np.errstate(divide="ignore"):
                return (2.0 / np.sqrt(self.b)) * np.arctanh(np.minimum(s, 1.0))
        raise NotImplementedError

    def frame_radius(self, t) -> np.ndarray:
        """Inverse of :meth:`frame_time`."""
        t = np.asarray(t, dtype=float)
        if self.kind == "euclidean":
            return t
        if self.kind == "poincare_disk":
            return np.tanh(np.sqrt(self.b) * t / 2.0)
        raise NotImplementedError

    def distance(self, z, w) -> np.ndarray:
        """Closed-form metric distance (euclidean and Poincare models)."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if self.kind == "euclidean":
            return np.abs(z - w)
        if self.kind == "poincare_disk":
            q = np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)
            return self.frame_time(q)
        return _shooting_distance(self, z, w)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _check_chart(model: ManifoldModel, z) -> None:
    if not np.all(model.in_chart(z)):
        raise ChartError(f"point outside the chart of the {model.kind} model")


def conformal_factor(model: ManifoldModel, p) -> float | np.ndarray:
    z = as_complex(p)
    _check_chart(model, z)
    out = model.lam(z)
    return float(out) if np.ndim(out) == 0 else out


def curvature(model: ManifoldModel, p, h: float = 1e-4) -> float | np.ndarray:
    """Gaussian curvature ``K = -lam**-2 * laplacian(log lam)`` by central differences."""
    z = np.asarray(as_complex(p))
    _check_chart(model, z)
    if model.chart_radius is not None and np.any(model.chart_radius - np.abs(z) < 2 * h):
        raise StencilError(f"curvature stencil of width {h} leaves the chart")
    ll = lambda w: np.log(model.lam(w))  # noqa: E731
    lap = (ll(z + h) + ll(z - h) + ll(z + 1j * h) + ll(z - 1j * h) - 4.0 * ll(z)) / h**2
    out = -lap / model.lam(z) ** 2
    return float(out) if out.ndim == 0 else out


def unit_direction(model: ManifoldModel, p, theta) -> np.ndarray:
    """Chart vector of unit metric length pointing at euclidean angle ``theta``."""
    z = as_complex(p)
    _check_chart(model, z)
    v = np.exp(1j * np.asarray(theta, dtype=float)) / model.lam(z)
    return as_xy(v)


@dataclass
class GeodesicPath:
    """Samples ``(t, point, velocity)`` along a unit-speed geodesic."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    t_max: float
    terminated_early: bool

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rhs(model: ManifoldModel, y: np.ndarray) -> np.ndarray:
    # y[:, 0] position, y[:, 1] chart velocity (both complex)
    z, v = y[:, 0], y[:, 1]
    g = model.grad_log_lam(z)
    dot = g.real * v.real + g.imag * v.imag
    acc = -2.0 * dot * v + (v.real**2 + v.imag**2) * g
    return np.stack([v, acc], axis=1)


def _normalize(model: ManifoldModel, y: np.ndarray) -> np.ndarray:
    y = y.copy()
    y[:, 1] = y[:, 1] / (np.abs(y[:, 1]) * model.lam(y[:, 0]))
    return y


def dp_step(model: ManifoldModel, y: np.ndarray, h: np.ndarray):
    """One Dormand-Prince step of size ``h`` per ray.

    Returns ``(y_new, err)`` where ``err`` is the embedded error estimate.
    Rows whose stages leave the chart get ``err = inf``.
    """
    h = np.asarray(h, dtype=float)[:, None]
    k = []
    bad = np.zeros(len(y), dtype=bool)
    for i in range(7):
        yi = y.copy()
        for j, a in enumerate(_A[i]):
            if a:
                yi = yi + h * a * k[j]
        bad |= ~model.in_chart(yi[:, 0])
        yi[bad, 0] = 0.0
        k.append(_rhs(model, yi))
    y_new = y + h * sum(b * kk for b, kk in zip(_B, k) if b)
    err = h * sum(e * kk for e, kk in zip(_E, k) if e)
    err = np.where(bad[:, None], np.inf, err)
    return y_new, err


class GeodesicBatch:
    """Adaptive integration of many unit-speed geodesics at once.

    Each ray keeps its own step size.  After every accepted step the chart
    velocity is rescaled to unit metric speed.  ``advance()`` performs one
    attempted step for every active ray and reports which rays accepted.
    """

    def __init__(self, model: ManifoldModel, z0, v0, t_max: float, h0: float = 0.05,
                 h_max: float | None = None, rtol: float = 1e-10, atol: float = 1e-14):
        z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
        v0 = np.atleast_1d(np.asarray(v0, dtype=complex))
        self.model = model
        self.y = _normalize(model, np.stack([z0, v0 * np.ones_like(z0)], axis=1))
        self.t = np.zeros(len(z0))
        self.h = np.full(len(z0), float(h0))
        self.h_max = float(h_max) if h_max else np.inf
        self.t_max = float(t_max)
        self.rtol, self.atol = rtol, atol
        self.active = np.ones(len(z0), dtype=bool)
        self.early = np.zeros(len(z0), dtype=bool)

    def advance(self):
        idx = np.flatnonzero(self.active)
        if idx.size == 0:
            return idx, None, None, None
        y0 = self.y[idx]
        h = np.minimum(np.minimum(self.h[idx], self.t_max - self.t[idx]), self.h_max)
        y1, err = dp_step(self.model, y0, h)
        scale = self.rtol * np.maximum(np.abs(y0), np.abs(y1))
        # chart speed decays like exp(-t) near an ideal boundary, so velocity error is relative only
        scale[:, 0] += self.atol
        scale[:, 1] += self.atol * np.abs(y0[:, 1])
        with np.errstate(invalid="ignore"):
            enorm = np.sqrt(np.mean(np.abs(err / scale) ** 2, axis=1))
        ok = enorm <= 1.0
        ok &= self.model.in_chart(y1[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(ok, 0.9 * enorm ** -0.2, 0.9 * enorm ** -0.25)
        fac = np.clip(np.nan_to_num(fac, nan=0.2, posinf=5.0), 0.2, 5.0)
        self.h[idx] = h * fac
        acc = idx[ok]
        y_prev = self.y[acc].copy()
        t_prev = self.t[acc].copy()
        self.y[acc] = _normalize(self.model, y1[ok])
        self.t[acc] = t_prev + h[ok]
        done = self.t[acc] >= self.t_max * (1 - 1e-14)
        self.active[acc[done]] = False
        # step underflow: the ray is pinned against the chart boundary
        stuck = idx[~ok & (self.h[idx] < 1e-13)]
        self.active[stuck] = False
        self.early[stuck] = True
        # positions that no longer move in floating point are pinned at the chart edge
        pinned = (self.y[acc, 0] == y_prev[:, 0]) & (self.t[acc] < self.t_max * (1 - 1e-14))
        edge = ~self.model.in_chart(self.y[acc, 0]) | pinned
        if self.model.chart_radius is not None:
            edge |= np.abs(self.y[acc, 0]) > self.model.chart_radius * (1 - EDGE_STOP)
        near_edge = acc[edge & self.active[acc]]
        self.active[near_edge] = False
        self.early[near_edge] = True
        return acc, t_prev, y_prev, h[ok]

    def run(self, max_iter: int = 10**6) -> None:
        for _ in range(max_iter):
            if not self.active.any():
                return
            self.advance()
        raise RuntimeError("geodesic integration exceeded the iteration budget")


def trace_geodesic(model: ManifoldModel, p, v, t_max: float, step: float = 0.05) -> GeodesicPath:
    """Integrate the unit-speed geodesic from ``p`` with chart velocity ``v``.

    ``step`` is the initial and the largest allowed arclength step, so the
    returned samples are at most ``step`` apart.  Integration stops at
    ``t_max`` or when the path reaches the edge of the chart
    (``terminated_early``).
    """
    z0 = as_complex(p)
    v0 = as_complex(v)
    _check_chart(model, z0)
    speed = abs(v0) * float(model.lam(z0))
    if abs(speed - 1.0) > 1e-8:
        raise ValueError(f"initial velocity has metric speed {speed}, expected 1")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    batch = GeodesicBatch(model, [z0], [v0], t_max, h0=step, h_max=step)
    ts, ys = [0.0], [batch.y[0].copy()]
    while batch.active[0]:
        acc, *_ = batch.advance()
        if acc.size:
            ts.append(batch.t[0])
            ys.append(batch.y[0].copy())
    ys = np.array(ys)
    return GeodesicPath(np.array(ts), as_xy(ys[:, 0]), as_xy(ys[:, 1]), float(t_max),
                        bool(batch.early[0]))


def _shooting_distance(model: ManifoldModel, z, w) -> np.ndarray:
    """Metric distance by geodesic shooting (custom models, no conjugate points assumed)."""
    from scipy.optimize import least_squares

    z, w = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
    out = np.empty(z.shape)
    for i in np.ndindex(z.shape):
        a, b = complex(z[i]), complex(w[i])
        if a == b:
            out[i] = 0.0
            continue
        # straight-chart length as initial guess
        s = np.linspace(0, 1, 65)
        guess = float(np.trapz(model.lam(a + s * (b - a)), s) * abs(b - a))

        def endpoint(x):
            th, t = x
            batch = GeodesicBatch(model, [a], [np.exp(1j * th)], max(t, 1e-12))
            batch.run()
            return batch.y[0, 0]

        def res(x):
            e = endpoint(x) - b
            return [e.real, e.imag]

        sol = least_squares(res, [np.angle(b - a), guess], xtol=1e-12, ftol=1e-12)
        out[i] = sol.x[1]
    return out
