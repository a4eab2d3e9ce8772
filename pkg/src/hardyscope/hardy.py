"""Mean-distance Hardy weights and numerical checks of Hardy-type inequalities.

The weight at ``p`` is ``m(p) = [ mean_v 1/r_p(v)^2 ]^(-1/2)`` over unit
directions, where ``r_p(v)`` is the two-sided geodesic hitting radius.
Infinite rays contribute nothing to the mean.  In dimension two the Dirichlet
energy is conformally invariant, so energies are computed in the chart.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import DomainError, DomainSpec, boundary_distance, cast_rays, contains
from .expr import parse
from .manifold import as_complex

DIM = 2
FLAG_CAPPED = 1
FLAG_INFINITE = 2


@dataclass(frozen=True)
class DirectionQuadrature:
    """Equispaced directions with uniform weights ``1/n_dirs`` (normalised measure)."""

    n_dirs: int = 720
    offset: Optional[float] = None
    t_max: Optional[float] = None

    def __post_init__(self):
        if self.n_dirs < 16:
            raise ValueError("n_dirs must be at least 16")

    @property
    def phase(self) -> float:
        return np.pi / (2 * self.n_dirs) if self.offset is None else float(self.offset)

    @property
    def angles(self) -> np.ndarray:
        return self.phase + 2 * np.pi * np.arange(self.n_dirs) / self.n_dirs


def _inverse_square_means(dom: DomainSpec, z: np.ndarray, quad: DirectionQuadrature,
                          gamma_only: bool, method: str = "auto"):
    """Mean of ``1/r^2`` per point on the full and on the every-other-direction rule.

    Returns ``(mean, coarse_mean, capped_fraction)``.
    """
    n = quad.n_dirs
    th = quad.angles
    # r is pi-periodic; with n divisible by 4 half of the directions suffice
    sym = n % 4 == 0
    use = th[: n // 2] if sym else th
    c = cast_rays(dom, z[:, None], use[None, :], quad.t_max, gamma_only, method)
    r = c.two_sided.reshape(z.size, use.size)
    capped = (c.capped_fwd | c.capped_bwd).reshape(z.size, use.size) & ~np.isfinite(r)
    inv = np.where(np.isfinite(r), 1.0 / r**2, 0.0)
    mean = inv.mean(axis=1)
    coarse = inv[:, ::2].mean(axis=1)
    return mean, coarse, capped.mean(axis=1)


def _weight(mean: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(mean > 0, 1.0 / np.sqrt(mean), np.inf)


def mean_hitting_weight(dom: DomainSpec, p, quad: DirectionQuadrature = DirectionQuadrature(),
                        gamma_only: bool = False, method: str = "auto") -> float | np.ndarray:
    """Hardy weight ``m(p)`` (or ``m_Gamma(p)`` with ``gamma_only``) at interior points."""
    z = np.asarray(as_complex(p), dtype=complex)
    if not np.all(contains(dom, z)):
        raise DomainError("weight requested at a point outside the open domain")
    mean, _, _ = _inverse_square_means(dom, z.ravel(), quad, gamma_only, method)
    out = _weight(mean).reshape(z.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# lattices and weight fields
# ---------------------------------------------------------------------------

def lattice(bbox, h: float, pad: int = 0):
    """Integer index ranges of the lattice ``h * Z^2`` covering ``bbox``."""
    x0, x1, y0, y1 = bbox
    i = np.arange(int(np.floor(x0 / h + 1e-9)) - pad, int(np.ceil(x1 / h - 1e-9)) + pad + 1)
    j = np.arange(int(np.floor(y0 / h + 1e-9)) - pad, int(np.ceil(y1 / h - 1e-9)) + pad + 1)
    return i, j


def interior_nodes(dom: DomainSpec, h: float):
    """Lattice indices and chart points of all nodes inside the open domain."""
    i, j = lattice(dom.bbox, h)
    I, J = np.meshgrid(i, j, indexing="ij")
    z = I * h + 1j * (J * h)
    ins = contains(dom, z)
    return np.stack([I[ins], J[ins]], axis=1), z[ins]


@dataclass
class WeightField:
    """Sampled weight ``m`` on the interior nodes of a square lattice."""

    h: float
    ij: np.ndarray
    points: np.ndarray
    m: np.ndarray
    d: np.ndarray
    m_coarse: np.ndarray
    capped_fraction: np.ndarray
    gamma_restricted: bool
    quad: DirectionQuadrature
    t_max: float

    @property
    def flags(self) -> np.ndarray:
        return (FLAG_CAPPED * (self.capped_fraction > 0) + FLAG_INFINITE * ~np.isfinite(self.m)).astype(int)

    @property
    def rel_quad_error(self) -> np.ndarray:
        """Per-node relative change of ``m`` when halving the number of directions."""
        with np.errstate(invalid="ignore"):
            e = np.abs(self.m - self.m_coarse) / self.m
        return np.where(np.isfinite(e), e, 0.0)

    def value_at(self, p) -> float:
        z = complex(as_complex(p))
        k = np.argmin(np.abs(self.points - z))
        if abs(self.points[k] - z) > 1e-9 * max(1.0, self.h):
            raise KeyError(f"{z} is not a node of this field")
        return float(self.m[k])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "d", "m", "flags"])
            for z, d, m, f in zip(self.points, self.d, self.m, self.flags):
                w.writerow([f"{z.real:.12g}", f"{z.imag:.12g}", f"{d:.12g}", f"{m:.12g}", int(f)])


def weight_field(dom: DomainSpec, h: float, quad: DirectionQuadrature = DirectionQuadrature(),
                 gamma_only: bool = False, threads: int = 1, chunk: int = 256,
                 method: str = "auto") -> WeightField:
    """Evaluate the weight at every interior node of the lattice ``h Z^2`` within the bbox."""
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    ij, z = interior_nodes(dom, h)
    if z.size == 0:
        raise DomainError(f"no interior lattice nodes at spacing {h}")
    pieces = [slice(k, min(k + chunk, z.size)) for k in range(0, z.size, chunk)]
    work = lambda s: _inverse_square_means(dom, z[s], quad, gamma_only, method)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, pieces))
    else:
        parts = [work(s) for s in pieces]
    mean = np.concatenate([p[0] for p in parts])
    coarse = np.concatenate([p[1] for p in parts])
    capped = np.concatenate([p[2] for p in parts])
    d = boundary_distance(dom, z) if dom.model.closed_form else np.array(
        [boundary_distance(dom, zi) for zi in z])
    t_max = dom.default_t_max() if quad.t_max is None else quad.t_max
    return WeightField(h, ij, z, _weight(mean), np.asarray(d, float), _weight(coarse), capped,
                       gamma_only, quad, t_max)


# ---------------------------------------------------------------------------
# test functions, energies and Hardy reports
# ---------------------------------------------------------------------------

@dataclass
class TestFunction:
    """A closed-form function ``f(x, y)`` (vectorised) with a label."""

    f: Callable
    name: str = "f"

    __test__ = False  # not a pytest class

    def __call__(self, x, y):
        return np.asarray(self.f(x, y), dtype=float)

    @classmethod
    def from_expression(cls, source: str, name: str | None = None) -> "TestFunction":
        return cls(parse(source), name or source)


def _gradient_sq(f: Callable, X, Y, h):
    # fourth-order central differences
    def d(axis):
        if axis == 0:
            fp1, fm1, fp2, fm2 = f(X + h, Y), f(X - h, Y), f(X + 2 * h, Y), f(X - 2 * h, Y)
        else:
            fp1, fm1, fp2, fm2 = f(X, Y + h), f(X, Y - h), f(X, Y + 2 * h), f(X, Y - 2 * h)
        return (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h)

    return d(0) ** 2 + d(1) ** 2


def cell_fractions(dom: DomainSpec, X, Y, h: float, sub: int = 16) -> np.ndarray:
    """Area fraction of each lattice cell ``[x-h/2, x+h/2] x [y-h/2, y+h/2]`` inside the domain."""
    probes = [contains(dom, (X + a * h / 2) + 1j * (Y + b * h / 2))
              for a in (-1, 0, 1) for b in (-1, 0, 1)]
    all_in = np.all(probes, axis=0)
    any_in = np.any(probes, axis=0)
    w = all_in.astype(float)
    cut = any_in & ~all_in
    if cut.any():
        u = (np.arange(sub) + 0.5) / sub - 0.5
        U, V = np.meshgrid(u, u, indexing="ij")
        zs = (X[cut][:, None] + h * U.ravel()[None]) + 1j * (Y[cut][:, None] + h * V.ravel()[None])
        w[cut] = contains(dom, zs).mean(axis=1)
    return w


@dataclass
class _EnergyGrid:
    """Quadrature geometry for :func:`dirichlet_energy` on one lattice."""

    h: float
    clean: np.ndarray        # cell centres whose 4th-order stencil stays inside
    clean_w: np.ndarray      # their area fractions
    sub: np.ndarray          # inside sub-cell points of the remaining cells
    sub_step: float
    sub_masks: list          # membership of sub +- k*step along x and y, k = 1, 2


_ENERGY_CACHE: dict = {}


def _energy_grid(dom: DomainSpec, h: float, sub: int = 8) -> _EnergyGrid:
    key = (id(dom), float(h), sub)
    hit = _ENERGY_CACHE.get(key)
    if hit is not None and hit[0] is dom:
        return hit[1]
    i, j = lattice(dom.bbox, h, pad=2)
    X, Y = np.meshgrid(i * h, j * h, indexing="ij")
    w = cell_fractions(dom, X, Y, h)
    keep = w > 0
    z = X[keep] + 1j * Y[keep]
    w = w[keep]
    stencil = [contains(dom, z + k * h * e) for e in (1, 1j) for k in (-2, -1, 1, 2)]
    clean = (w == 1.0) & np.all(stencil, axis=0)
    step = h / sub
    u = ((np.arange(sub) + 0.5) / sub - 0.5) * h
    U, V = np.meshgrid(u, u, indexing="ij")
    pts = (z[~clean][:, None] + (U + 1j * V).ravel()[None]).ravel()
    pts = pts[contains(dom, pts)]
    masks = [[contains(dom, pts + k * step * e) for k in (-2, -1, 1, 2)] for e in (1, 1j)]
    grid = _EnergyGrid(h, z[clean], w[clean], pts, step, masks)
    if len(_ENERGY_CACHE) > 16:
        _ENERGY_CACHE.clear()
    _ENERGY_CACHE[key] = (dom, grid)
    return grid


def _inward_derivative(f: Callable, z: np.ndarray, e: complex, step: float, masks) -> np.ndarray:
    """Derivative along ``e`` using only points inside the domain.

    Central second order where both neighbours are inside, otherwise a
    one-sided second- or first-order formula pointing into the domain.
    """
    m2, m1, p1, p2 = masks
    F = lambda k: f((z + k * step * e).real, (z + k * step * e).imag)  # noqa: E731
    f0, fp1, fm1 = F(0), F(1), F(-1)
    fp2, fm2 = F(2), F(-2)
    central = (fp1 - fm1) / (2 * step)
    fwd2 = (-3 * f0 + 4 * fp1 - fp2) / (2 * step)
    bwd2 = (3 * f0 - 4 * fm1 + fm2) / (2 * step)
    fwd1 = (fp1 - f0) / step
    bwd1 = (f0 - fm1) / step
    out = np.zeros(z.shape)
    out = np.where(m1 & ~p1, np.where(m2, bwd2, bwd1), out)
    out = np.where(p1 & ~m1, np.where(p2, fwd2, fwd1), out)
    return np.where(p1 & m1, central, out)


def dirichlet_energy(dom: DomainSpec, f: Callable, h: float) -> float:
    """``integral |grad f|^2 dx dy`` over the domain.

    Cells whose fourth-order central stencil stays in the domain use the
    midpoint rule.  Cells cut by the boundary, or with stencils reaching
    outside, are integrated on an 8 x 8 sub-grid with differences that only
    sample inside points, so ``f`` may be clamped to zero outside.  In two
    dimensions this equals the metric energy ``integral ||grad_g f||^2 dmu``
    for every conformal metric.
    """
    g = _energy_grid(dom, h)
    total = float(np.sum(g.clean_w * _gradient_sq(f, g.clean.real, g.clean.imag, h))) * h * h
    if g.sub.size:
        gx = _inward_derivative(f, g.sub, 1.0, g.sub_step, g.sub_masks[0])
        gy = _inward_derivative(f, g.sub, 1j, g.sub_step, g.sub_masks[1])
        total += float(np.sum(gx**2 + gy**2)) * g.sub_step**2
    return total


def metric_energy(dom: DomainSpec, f: Callable, h: float) -> float:
    """Energy ``integral ||grad_g f||_g^2 dmu`` computed directly from the metric.

    The metric gradient norm is assembled from directional derivatives along
    a g-orthonormal frame (steps of metric length ``h``) and integrated
    against ``dmu = lam^2 dx dy``.  Independent route to
    :func:`dirichlet_energy`, used to test conformal invariance.
    """
    from .manifold import unit_direction

    i, j = lattice(dom.bbox, h, pad=1)
    X, Y = np.meshgrid(i * h, j * h, indexing="ij")
    w = cell_fractions(dom, X, Y, h)
    keep = (w > 0) & dom.model.in_chart(X + 1j * Y)
    z = X[keep] + 1j * Y[keep]
    grad_g_sq = np.zeros(z.shape)
    for theta in (0.0, np.pi / 2):
        e = unit_direction(dom.model, z, theta)
        e = e[..., 0] + 1j * e[..., 1]
        s = h * e
        g = lambda t: f((z + t * s).real, (z + t * s).imag)  # noqa: E731
        grad_g_sq += ((8 * (g(1) - g(-1)) - (g(2) - g(-2))) / (12 * h)) ** 2
    area = dom.model.lam(z) ** 2 * h * h
    return float(np.sum(w[keep] * grad_g_sq * area))


def boundary_product(dom: DomainSpec, gamma_only: bool = False) -> Callable:
    """Smooth function vanishing on every boundary segment (or on the Dirichlet set only).

    Product of the generalised-circle functions carrying the segments, each
    signed to be positive inside the domain.
    """
    from .domain import _circle_value

    segs = [s for s in dom.segments if s.gamma_member or not gamma_only]
    if not segs:
        raise DomainError("no boundary segments selected")
    probe = _interior_probe(dom)
    # one factor per supporting circle
    seen, factors = set(), []
    for s in segs:
        key = tuple(np.round(np.array([s.coeffs[0], s.coeffs[1].real, s.coeffs[1].imag, s.coeffs[2]]), 12))
        if key in seen:
            continue
        seen.add(key)
        factors.append((s, float(np.sign(_circle_value(s, probe)))))

    def w(x, y):
        z = np.asarray(x) + 1j * np.asarray(y)
        out = np.ones(z.shape)
        for s, sign in factors:
            out = out * sign * _circle_value(s, z)
        return out

    return w


def _interior_probe(dom: DomainSpec) -> complex:
    """Deepest lattice node of a coarse grid, used as a reference interior point."""
    from .domain import chart_distance

    x0, x1, y0, y1 = dom.bbox
    X, Y = np.meshgrid(np.linspace(x0, x1, 41), np.linspace(y0, y1, 41), indexing="ij")
    z = (X + 1j * Y).ravel()
    z = z[contains(dom, z)]
    if z.size == 0:
        raise DomainError("could not locate an interior point")
    return complex(z[np.argmax(chart_distance(dom, z))])


def _bump(center: complex, radius: float) -> Callable:
    def f(x, y):
        s2 = (np.abs(np.asarray(x) + 1j * np.asarray(y) - center) / radius) ** 2
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = np.exp(1.0 - 1.0 / (1.0 - s2))
        return np.where(s2 < 1.0, v, 0.0)

    return f


def test_function_suite(dom: DomainSpec, n: int = 20, gamma_only: bool = False,
                        seed: int = 0) -> list[TestFunction]:
    """Built-in functions vanishing on the boundary (or on the Dirichlet set).

    Powers of :func:`boundary_product` times random quadratics, plus smooth
    compactly supported bumps (omitted for Dirichlet-set suites, where
    functions need not vanish elsewhere).
    """
    from .domain import chart_distance

    rng = np.random.default_rng(seed)
    w = boundary_product(dom, gamma_only)
    out: list[TestFunction] = []
    n_prod = n if gamma_only else n - n // 3
    for k in range(n_prod):
        q = 1 + k % 3
        c = rng.uniform(-1, 1, 6) * np.array([1, 0.5, 0.5, 0.3, 0.3, 0.3])
        c[0] = 1.0

        def f(x, y, q=q, c=c):
            poly = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
            return w(x, y) ** q * poly

        out.append(TestFunction(f, f"boundary_product^{q} * quadratic[{k}]"))
    x0, x1, y0, y1 = dom.bbox
    while len(out) < n:
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        if not contains(dom, z):
            continue
        r = float(chart_distance(dom, z)) * rng.uniform(0.3, 0.95)
        if r < 0.1 * max(x1 - x0, y1 - y0):
            continue
        out.append(TestFunction(_bump(z, r), f"bump({z.real:.3f},{z.imag:.3f};{r:.3f})"))
    return out


@dataclass
class HardyReport:
    energy: float
    rhs: float
    ratio: float
    quad_error_budget: float
    budget_terms: dict = field(default_factory=dict)
    function: str = "f"
    gamma_restricted: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _check_vanishing(dom: DomainSpec, f: Callable, scale: float, gamma_only: bool) -> None:
    segs = [s for s in dom.segments if s.finite and (s.gamma_member or not gamma_only)]
    if not segs:
        return
    u = (np.arange(97) + 0.5) / 97
    z = np.concatenate([s.point_at(u) for s in segs])
    z = z[dom.model.in_chart(z)]
    vals = np.abs(f(z.real, z.imag))
    if np.max(vals, initial=0.0) > 1e-8 * max(scale, 1e-300):
        where = "on the Dirichlet set" if gamma_only else "on the boundary"
        raise DomainError(f"test function does not vanish {where} (max |f| = {vals.max():.3g})")


def _rhs_sum(field_: WeightField, fz: np.ndarray, m: np.ndarray, lam2: np.ndarray, mask=None) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(np.isfinite(m), 1.0 / m**2, 0.0)
    terms = fz**2 * inv * lam2
    if mask is not None:
        return float(np.sum(terms[mask]) * (2 * field_.h) ** 2)
    return float(np.sum(terms) * field_.h**2)


def hardy_report(dom: DomainSpec, f: Callable, field_: WeightField, refine: int = 4) -> HardyReport:
    """Compare the energy ``Q(f)`` with ``(n/4) integral f^2/m^2 dmu`` on a weight field.

    ``f`` must vanish on the boundary (on the Dirichlet set for a restricted
    field).  ``refine`` subdivides the field spacing for the energy quadrature.
    """
    fz = f(field_.points.real, field_.points.imag)
    _check_vanishing(dom, f, float(np.max(np.abs(fz), initial=0.0)), field_.gamma_restricted)
    h_e = field_.h / refine
    energy = dirichlet_energy(dom, f, h_e)
    energy_2 = dirichlet_energy(dom, f, 2 * h_e)
    lam2 = dom.model.lam(field_.points) ** 2
    c = DIM / 4
    rhs = c * _rhs_sum(field_, fz, field_.m, lam2)
    rhs_coarse_dirs = c * _rhs_sum(field_, fz, field_.m_coarse, lam2)
    even = np.all(field_.ij % 2 == 0, axis=1)
    rhs_2h = c * _rhs_sum(field_, fz, field_.m, lam2, even)
    cap_missing = c * float(np.sum(fz**2 * lam2 * field_.capped_fraction) * field_.h**2) / field_.t_max**2
    terms = {}
    if rhs > 0:
        terms["angular"] = abs(rhs - rhs_coarse_dirs) / rhs
        terms["spatial_rhs"] = abs(rhs - rhs_2h) / rhs
        terms["capped_rays"] = cap_missing / rhs
    terms["spatial_energy"] = abs(energy - energy_2) / energy if energy > 0 else 0.0
    budget = float(sum(terms.values()))
    ratio = energy / rhs if rhs > 0 else np.inf
    name = getattr(f, "name", getattr(f, "source", "f"))
    return HardyReport(energy, rhs, ratio, budget, terms, str(name), field_.gamma_restricted)


@dataclass(frozen=True)
class WeakHardyConstants:
    a: float
    c_rhs: float
    alpha: float
    v_inf: float


def weak_hardy_constants(alpha: float, v_inf: float, n: int = DIM) -> WeakHardyConstants:
    """Shift and right-hand coefficient for ``H = A + V`` with ellipticity ``alpha``.

    ``Q(f) + a ||f||^2 >= (alpha n / 4) integral f^2/m^2`` holds with
    ``a = max(0, -inf V)``; ``a == 0`` is the strong inequality.
    """
    if not alpha > 0:
        raise ValueError("the ellipticity constant must be positive")
    if not np.isfinite(v_inf):
        raise ValueError("the potential must be bounded below")
    return WeakHardyConstants(max(0.0, -float(v_inf)), alpha * n / 4, float(alpha), float(v_inf))


# ---------------------------------------------------------------------------
# one-dimensional Hardy inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hardy1D:
    energy: float
    weighted: float
    ratio: float


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    from scipy.integrate import simpson

    return float(simpson(y, x=x))


def _derivative(f: Callable, x: np.ndarray, scale: float) -> np.ndarray:
    e = 1e-3 * scale
    return (8 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12 * e)


def hardy_1d(f: Callable, interval: Sequence[float], n_points: int = 100_001,
             df: Callable | None = None) -> Hardy1D:
    """``integral |f'|^2`` against ``integral f^2 / (4 d^2)`` by composite Simpson.

    ``interval`` is ``(a, b)`` or ``(a, inf)``; ``d`` is the distance to the
    nearest finite endpoint.  The weighted integrand at an endpoint is
    replaced by its limit ``f'(a)^2 / 4``.
    """
    a, b = float(interval[0]), float(interval[1])
    f = np.vectorize(f, otypes=[float]) if not _is_vectorised(f) else f
    df = df if df is not None else (lambda x: _derivative(f, x, 1.0))
    if abs(f(np.array([a]))[0]) > 1e-9:
        raise ValueError("f must vanish at the left endpoint")
    n = n_points + (1 - n_points % 2)  # odd node count for Simpson
    if np.isfinite(b):
        if abs(f(np.array([b]))[0]) > 1e-9:
            raise ValueError("f must vanish at the right endpoint")
        c = 0.5 * (a + b)
        halves = [(a, c, a), (c, b, b)]
    else:
        L = _tail_cutoff(f, a)
        halves = [(a, L, a)]
    energy = weighted = 0.0
    for lo, hi, end in halves:
        x = np.linspace(lo, hi, n)
        fx = f(x)
        dfx = df(x)
        dist = np.abs(x - end)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = fx**2 / (4 * dist**2)
        w = np.where(dist > 0, w, dfx**2 / 4)
        energy += _simpson(dfx**2, x)
        weighted += _simpson(w, x)
    return Hardy1D(energy, weighted, energy / weighted)


def _is_vectorised(f: Callable) -> bool:
    try:
        out = f(np.array([0.25, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def _tail_cutoff(f: Callable, a: float) -> float:
    """Right end beyond which ``f`` is negligible; raises if ``f`` does not decay."""
    probe = a + 2.0 ** np.arange(-4, 12)
    vals = np.abs(f(probe))
    peak = vals.max()
    small = vals <= 1e-9 * peak
    if not small[-1]:
        raise ValueError("f does not decay on the half-axis (not square integrable)")
    k = int(np.argmax(small))
    return float(a + 2.0 * (probe[k] - a))


# ---------------------------------------------------------------------------
# Croke's first-eigenvalue bound
# ---------------------------------------------------------------------------

@dataclass
class CrokeResult:
    bound: float
    fiber_integrals: np.ndarray
    points: np.ndarray
    infinite_chords: bool

    @property
    def argmin(self) -> complex:
        return complex(self.points[int(np.argmin(self.fiber_integrals))])


def croke_bound(dom: DomainSpec, quad: DirectionQuadrature, sample_points) -> CrokeResult:
    """Lower bound ``(n pi / vol S^{n-1}) min_p integral 1/l(v)^2 dv`` for the first eigenvalue.

    ``l(v)`` is the full chord through ``p`` (forward plus backward exit
    time) and ``dv`` the unnormalised fiber measure of total mass ``2 pi``;
    in dimension two the prefactor equals one.
    """
    z = np.atleast_1d(np.asarray(as_complex(sample_points), dtype=complex))
    if not np.all(contains(dom, z)):
        raise DomainError("Croke samples must be interior points")
    th = quad.angles
    c = cast_rays(dom, z[:, None], th[None, :], quad.t_max)
    chord = c.chord.reshape(z.size, th.size)
    infinite = bool(np.any(~np.isfinite(chord)))
    inv = np.where(np.isfinite(chord), 1.0 / chord**2, 0.0)
    fiber = inv.sum(axis=1) * (2 * np.pi / th.size)
    prefactor = DIM * np.pi / (2 * np.pi)  # n pi / vol(S^1)
    return CrokeResult(float(prefactor * fiber.min()), fiber, z, infinite)
