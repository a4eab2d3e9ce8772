import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardyscope.manifold import (ChartError, ManifoldModel, StencilError, as_complex, conformal_factor,
                                 curvature, trace_geodesic, unit_direction)

radius = st.floats(0.0, 0.9)
angle = st.floats(0.0, 2 * np.pi)


def _point(r, a):
    return (r * np.cos(a), r * np.sin(a))


# --- conformal factor -------------------------------------------------------

def test_conformal_factor_examples():
    M = ManifoldModel.poincare()
    assert conformal_factor(M, (0.0, 0.0)) == pytest.approx(2.0)
    assert conformal_factor(M, (0.5, 0.0)) == pytest.approx(8 / 3)
    assert conformal_factor(ManifoldModel.euclidean(), (3.0, -7.0)) == 1.0


def test_conformal_factor_curvature_scale():
    assert conformal_factor(ManifoldModel.poincare(4.0), (0.0, 0.0)) == pytest.approx(1.0)


def test_outside_chart_raises():
    with pytest.raises(ChartError):
        conformal_factor(ManifoldModel.poincare(), (1.0, 0.0))


def test_custom_model_matches_poincare():
    C = ManifoldModel.custom("2/(1-x^2-y^2)", chart_radius=1.0)
    P = ManifoldModel.poincare()
    z = np.array([0.1 + 0.2j, -0.5j, 0.7])
    np.testing.assert_allclose(C.lam(z), P.lam(z), rtol=1e-14)
    np.testing.assert_allclose(C.grad_log_lam(z), P.grad_log_lam(z), rtol=1e-6)


def test_custom_model_rejects_bad_expression():
    with pytest.raises(ValueError):
        ManifoldModel.custom("2/(1-x^2-y^2", chart_radius=1.0)


# --- curvature --------------------------------------------------------------

def test_curvature_examples():
    assert abs(curvature(ManifoldModel.euclidean(), (0.2, 5.0))) < 1e-8
    # oracle: second derivatives of log(2/(1-r^2)) in closed form give -1
    assert curvature(ManifoldModel.poincare(), (0.3, 0.4)) == pytest.approx(-1.0, abs=1e-6)
    assert curvature(ManifoldModel.poincare(4.0), (0.0, 0.0)) == pytest.approx(-4.0, abs=1e-6)


def test_curvature_stencil_error_near_edge():
    with pytest.raises(StencilError):
        curvature(ManifoldModel.poincare(), (1 - 1e-4, 0.0))


@given(st.floats(0.1, 5.0), st.lists(st.tuples(radius, angle), min_size=1, max_size=10))
@settings(max_examples=10, deadline=None)
def test_curvature_constant_on_poincare(b, pts):
    M = ManifoldModel.poincare(b)
    for r, a in pts:
        assert curvature(M, _point(r, a)) == pytest.approx(-b, abs=1e-5 * max(1.0, b))


def test_curvature_constancy_100_points():
    rng = np.random.default_rng(1)
    r = 0.9 * np.sqrt(rng.uniform(size=100))
    a = rng.uniform(0, 2 * np.pi, 100)
    K = curvature(ManifoldModel.poincare(2.0), np.stack([r * np.cos(a), r * np.sin(a)], axis=-1))
    assert np.max(np.abs(K + 2.0)) < 1e-5


# --- unit directions --------------------------------------------------------

def test_unit_direction_examples():
    np.testing.assert_allclose(unit_direction(ManifoldModel.euclidean(), (0.3, 0.1), 0.0), [1.0, 0.0])
    P = ManifoldModel.poincare()
    np.testing.assert_allclose(unit_direction(P, (0.0, 0.0), 0.0), [0.5, 0.0])
    np.testing.assert_allclose(unit_direction(P, (0.5, 0.0), np.pi / 2), [0.0, 0.375], atol=1e-15)


@given(radius, angle, angle, st.floats(0.2, 3.0))
def test_unit_direction_has_unit_metric_length(r, a, theta, b):
    M = ManifoldModel.poincare(b)
    p = _point(r, a)
    v = unit_direction(M, p, theta)
    assert np.hypot(*v) * conformal_factor(M, p) == pytest.approx(1.0, rel=1e-12)


# --- geodesics --------------------------------------------------------------

def test_flat_geodesic_is_segment():
    path = trace_geodesic(ManifoldModel.euclidean(), (0, 0), (1, 0), 2.0)
    np.testing.assert_allclose(path.end, [2.0, 0.0], atol=1e-12)
    assert np.max(np.abs(path.points[:, 1])) == 0.0
    assert not path.terminated_early


def test_radial_poincare_geodesic():
    # closed-form oracle: the radial geodesic from 0 reaches tanh(t/2) at time t
    path = trace_geodesic(ManifoldModel.poincare(), (0, 0), (0.5, 0), 1.0)
    assert path.t[-1] == pytest.approx(1.0)
    assert path.end[0] == pytest.approx(np.tanh(0.5), abs=1e-6)
    assert np.max(np.abs(path.points[:, 1])) < 1e-9


def test_non_unit_initial_velocity_rejected():
    with pytest.raises(ValueError, match="metric speed"):
        trace_geodesic(ManifoldModel.poincare(), (0, 0), (1, 0), 1.0)


def test_trace_stops_at_ideal_boundary():
    path = trace_geodesic(ManifoldModel.poincare(), (0, 0), (0.5, 0), 60.0)
    assert path.terminated_early
    assert path.t[-1] < 60.0
    assert np.hypot(*path.end) < 1.0


def test_custom_model_geodesic_matches_closed_form():
    C = ManifoldModel.custom("2/(1-x^2-y^2)", chart_radius=1.0)
    P = ManifoldModel.poincare()
    p = 0.1 + 0.2j
    v = unit_direction(C, (0.1, 0.2), 1.0)
    end = trace_geodesic(C, (0.1, 0.2), v, 1.5).end
    assert float(P.distance(p, as_complex(end))) == pytest.approx(1.5, rel=1e-6)


@given(radius, angle, angle, st.floats(0.1, 2.0))
@settings(max_examples=25, deadline=None)
def test_geodesic_unit_speed(r, a, theta, t):
    M = ManifoldModel.poincare()
    p = _point(r, a)
    path = trace_geodesic(M, p, unit_direction(M, p, theta), t)
    speed = np.hypot(*path.velocities.T) * M.lam(as_complex(path.points))
    assert np.max(np.abs(speed - 1)) < 1e-8
    assert np.all(np.diff(path.t) > 0) and path.t[0] == 0


@given(radius, angle, angle, st.floats(0.1, 2.0))
@settings(max_examples=25, deadline=None)
def test_geodesic_reversibility(r, a, theta, t):
    M = ManifoldModel.poincare()
    p = _point(r, a)
    fwd = trace_geodesic(M, p, unit_direction(M, p, theta), t)
    if fwd.terminated_early:
        return
    back = trace_geodesic(M, fwd.end, -fwd.velocities[-1], t)
    assert np.hypot(*(back.end - np.asarray(p))) < 1e-6 * t


@given(angle, st.floats(0.1, 4.0))
@settings(max_examples=25, deadline=None)
def test_geodesics_through_origin_are_diameters(theta, t):
    M = ManifoldModel.poincare()
    path = trace_geodesic(M, (0, 0), unit_direction(M, (0, 0), theta), t)
    normal = np.array([-np.sin(theta), np.cos(theta)])
    assert np.max(np.abs(path.points @ normal)) < 1e-9


@given(radius, angle, radius, angle)
def test_distance_symmetric_and_triangle(r1, a1, r2, a2):
    M = ManifoldModel.poincare()
    z, w = as_complex(_point(r1, a1)), as_complex(_point(r2, a2))
    dzw = float(M.distance(z, w))
    assert dzw == pytest.approx(float(M.distance(w, z)), abs=1e-12)
    assert dzw <= float(M.distance(z, 0)) + float(M.distance(0, w)) + 1e-12
