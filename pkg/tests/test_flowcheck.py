import json

import numpy as np
import pytest

from hardyscope import domain as dm
from hardyscope import flowcheck as fc
from hardyscope.manifold import ManifoldModel

P = ManifoldModel.poincare()
N = 200_000


def _paraboloid(x, y):
    return 1 - x * x - y * y


def test_disk_constant(unit_disk):
    r = fc.santalo_compare(unit_disk, fc.Integrand.constant(), N, seed=0)
    # Liouville mass of the unit disk: area * 2 pi
    assert r.rhs == pytest.approx(2 * np.pi**2, rel=5 * r.stderr_rhs / r.rhs + 1e-12)
    assert r.agree


def test_disk_basepoint(unit_disk):
    r = fc.santalo_compare(unit_disk, fc.Integrand.basepoint(_paraboloid), N, seed=1)
    assert abs(r.lhs - np.pi**2) < 5 * r.stderr_lhs
    assert r.agree


def test_square_constant():
    r = fc.santalo_compare(dm.unit_square(), fc.Integrand.constant(), N, seed=2)
    assert r.lhs == pytest.approx(2 * np.pi, rel=1e-12)  # bounding box is the domain
    assert r.agree


def test_direction_dependent_integrand():
    F = fc.Integrand(lambda x, y, th: np.cos(th) ** 2 * (1 + x), "cos^2 (1+x)")
    assert fc.santalo_compare(dm.unit_square(), F, N, seed=3).agree


def test_hyperbolic_ball():
    r = fc.santalo_compare(dm.geodesic_ball(P, radius=1.0), fc.Integrand.constant(), N, seed=4)
    # hyperbolic area of a ball of radius 1 is 2 pi (cosh 1 - 1)
    assert abs(r.lhs - 2 * np.pi * 2 * np.pi * (np.cosh(1) - 1)) < 5 * r.stderr_lhs
    assert r.agree


def test_hyperbolic_polygon_direction_integrand():
    poly = dm.build_geodesic_polygon(P, [(0.5, 0.0), (-0.3, 0.4), (-0.3, -0.4)])
    F = fc.Integrand(lambda x, y, th: 1 + np.sin(th) * x, "1 + x sin")
    assert fc.santalo_compare(poly, F, N, seed=5).agree


def test_stderr_scaling(unit_disk):
    F = fc.Integrand.basepoint(_paraboloid)
    a = fc.santalo_compare(unit_disk, F, 50_000, seed=7)
    b = fc.santalo_compare(unit_disk, F, 200_000, seed=7)
    for x, y in ((a.stderr_lhs, b.stderr_lhs), (a.stderr_rhs, b.stderr_rhs)):
        assert 1 <= x / y <= 4  # n^-1/2 predicts 2


def test_deterministic_per_seed(unit_disk):
    F = fc.Integrand.basepoint(_paraboloid)
    a = fc.santalo_compare(unit_disk, F, 20_000, seed=11)
    b = fc.santalo_compare(unit_disk, F, 20_000, seed=11)
    c = fc.santalo_compare(unit_disk, F, 20_000, seed=12)
    assert a.to_json() == b.to_json()
    assert a.lhs != c.lhs


def test_report_json(unit_disk):
    r = fc.santalo_compare(unit_disk, fc.Integrand.constant(), 10_000, seed=0)
    doc = json.loads(r.to_json())
    assert doc["seed"] == 0 and doc["n_samples"] == 10_000
    assert doc["stderr_lhs"] > 0 and doc["stderr_rhs"] > 0
    assert doc["agree"] == r.agree


def test_boundary_fibers_valid():
    sq = dm.unit_square()
    s = fc.sample_boundary_fibers(sq, 50_000, fc._generator(0))
    assert np.all((s.cosine > 0) & (s.cosine <= 1))
    assert np.all(s.exit_time > 0) and np.all(np.isfinite(s.exit_time))
    # the exit point lies on the boundary again
    end = s.boundary_point + s.exit_time * np.exp(1j * s.inward_angle)
    assert np.all(~dm.contains(sq, end))


def test_critical_set_not_sampled():
    r = fc.santalo_compare(dm.unit_square(), fc.Integrand.constant(), 100_000, seed=9)
    assert r.n_critical == 0


def test_preconditions():
    with pytest.raises(dm.DomainError, match="compact"):
        fc.santalo_compare(dm.strip(), fc.Integrand.constant(), 1000)
    with pytest.raises(dm.DomainError, match="compact"):
        fc.santalo_compare(dm.ideal_triangle(P), fc.Integrand.constant(), 1000)
    custom = dm.disk(radius=0.5, model=ManifoldModel.custom("1 + x^2"))
    with pytest.raises(dm.DomainError, match="closed-form"):
        fc.santalo_compare(custom, fc.Integrand.constant(), 1000)
