import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hardyscope import domain as dm
from hardyscope.hardy import interior_nodes
from hardyscope.manifold import ManifoldModel

P = ManifoldModel.poincare()
angle = st.floats(0.0, 2 * np.pi)


def _disk_point(r_max=0.95):
    return st.tuples(st.floats(0.0, r_max), angle).map(lambda t: t[0] * np.exp(1j * t[1]))


def _square_point():
    return st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99)).map(lambda t: complex(*t))


def _geodesic_gap(phi):
    """Hyperbolic distance from 0 to the geodesic whose ideal ends subtend ``phi`` at 0."""
    # orthogonal circle: centre at 1/cos(phi/2), radius tan(phi/2)
    s = (1 - np.sin(phi / 2)) / np.cos(phi / 2)
    return 2 * np.arctanh(s)


# --- contains ---------------------------------------------------------------

def test_disk_contains_examples(unit_disk):
    assert dm.contains(unit_disk, 0j)
    assert not dm.contains(unit_disk, 2 + 0j)
    assert not dm.contains(unit_disk, 1 + 0j)


def test_square_boundary_is_excluded():
    sq = dm.unit_square()
    assert list(dm.contains(sq, np.array([0.5 + 0.5j, 0.5, 1 + 0.5j, 0j, 1.5 + 0.5j]))) == [True] + [False] * 4


@pytest.mark.parametrize("h,n", [(0.05, 20), (1 / 32, 32), (1 / 128, 128)])
def test_disk_lattice_count(h, n):
    # oracle: integer pairs strictly inside the circle of radius n
    i = np.arange(-n, n + 1)
    I, J = np.meshgrid(i, i)
    _, z = interior_nodes(dm.disk(), h)
    assert z.size == int(np.sum(I**2 + J**2 < n * n))


def test_ideal_triangle_contains(triangle):
    assert dm.contains(triangle, 0j)
    # the sides bulge inward: points near the unit circle between vertices are outside
    assert not dm.contains(triangle, 0.9 * np.exp(1j * np.pi / 6))
    # deep inside a cusp
    assert dm.contains(triangle, 0.99j)


# --- boundary distance ------------------------------------------------------

def test_boundary_distance_examples(unit_disk):
    assert dm.boundary_distance(unit_disk, 0.3 + 0j) == pytest.approx(0.7)
    ball = dm.geodesic_ball(P, radius=1.3)
    assert dm.boundary_distance(ball, 0j) == pytest.approx(1.3, abs=1e-12)


def test_ideal_triangle_distance_from_centre(triangle):
    assert dm.boundary_distance(triangle, 0j) == pytest.approx(_geodesic_gap(2 * np.pi / 3), abs=1e-12)
    assert _geodesic_gap(2 * np.pi / 3) == pytest.approx(np.log(np.sqrt(3)), abs=1e-14)


def test_boundary_distance_requires_interior(unit_disk):
    with pytest.raises(dm.DomainError):
        dm.boundary_distance(unit_disk, 1.5 + 0j)


def test_custom_model_distance_matches_closed_form(triangle):
    custom = triangle.with_model(ManifoldModel.custom("2/(1-x^2-y^2)", chart_radius=1.0))
    assert dm.boundary_distance(custom, 0.2 + 0.1j) == pytest.approx(
        dm.boundary_distance(triangle, 0.2 + 0.1j), rel=1e-6)


# --- hitting radius ---------------------------------------------------------

def test_hitting_radius_examples(unit_disk):
    for th in (0.0, 1.0, 2.5):
        assert dm.hitting_radius(unit_disk, 0j, th).hit_time == pytest.approx(1.0)
    hit = dm.hitting_radius(unit_disk, 0.5 + 0j, 0.0)
    assert hit.hit_time == pytest.approx(0.5)
    hp = dm.half_plane()
    assert dm.hitting_radius(hp, 1 + 0j, np.pi / 2).infinite
    assert dm.hitting_radius(hp, 1 + 0j, 2 * np.pi / 3).hit_time == pytest.approx(2.0, rel=1e-12)


def test_cusp_ray_is_infinite_one_way(triangle):
    # from the centre straight at an ideal vertex: forward never hits, backward does
    c = dm.cast_rays(triangle, 0j, np.pi / 2)
    assert np.isinf(c.t_fwd[0]) and np.isfinite(c.t_bwd[0])
    assert dm.hitting_radius(triangle, 0j, np.pi / 2).hit_time == pytest.approx(c.t_bwd[0])


@pytest.mark.parametrize("p", [0j, 0.2 + 0.1j, -0.3 + 0.6j])
def test_closed_form_and_traced_casts_agree(triangle, p):
    th = np.linspace(0, np.pi, 9, endpoint=False) + 0.01
    a = dm.cast_rays(triangle, p, th, method="closed")
    b = dm.cast_rays(triangle, p, th, method="trace")
    np.testing.assert_allclose(a.two_sided, b.two_sided, rtol=1e-8)


@given(_disk_point(), angle)
def test_two_sided_symmetry(p, th):
    dom = dm.disk()
    # th + pi is itself rounded, so agreement is to rounding level
    assert dm.hitting_radius(dom, p, th).hit_time == pytest.approx(
        dm.hitting_radius(dom, p, th + np.pi).hit_time, rel=1e-13)


@given(_square_point(), angle)
def test_two_sided_symmetry_square(p, th):
    sq = dm.unit_square()
    assert dm.hitting_radius(sq, p, th).hit_time == pytest.approx(
        dm.hitting_radius(sq, p, th + np.pi).hit_time, rel=1e-15)


@given(_disk_point(0.97), angle)
@settings(max_examples=60)
def test_hit_time_at_least_distance(p, th):
    tri = dm.ideal_triangle(P)
    assume(dm.contains(tri, p))
    hit = dm.hitting_radius(tri, p, th)
    if not hit.infinite:
        assert hit.hit_time >= dm.boundary_distance(tri, p) - 1e-6


@given(_square_point(), angle)
def test_hit_time_at_least_distance_square(p, th):
    sq = dm.unit_square()
    assert dm.hitting_radius(sq, p, th).hit_time >= dm.boundary_distance(sq, p) - 1e-6


@given(st.tuples(st.floats(0.2, 0.8), st.floats(0.2, 0.8)).map(lambda t: complex(*t)), angle)
def test_inclusion_monotonicity(p, th):
    inner = dm.unit_square()
    outer = dm.disk(center=(0.5, 0.5), radius=0.75)
    assert dm.hitting_radius(inner, p, th).hit_time <= dm.hitting_radius(outer, p, th).hit_time + 1e-12


@given(_disk_point(0.9), angle)
def test_inclusion_monotonicity_hyperbolic(p, th):
    ball = dm.geodesic_ball(P, radius=1.0)
    big = dm.geodesic_ball(P, radius=2.0)
    assume(dm.contains(ball, p))
    assert dm.hitting_radius(ball, p, th).hit_time <= dm.hitting_radius(big, p, th).hit_time + 1e-12


@given(_square_point(), angle, st.lists(st.booleans(), min_size=4, max_size=4))
def test_gamma_monotonicity(p, th, mask):
    assume(any(mask))
    sq = dm.unit_square(gamma=mask)
    full = dm.hitting_radius(sq, p, th).hit_time
    assert dm.hitting_radius(sq, p, th, gamma_only=True).hit_time >= full


@given(_disk_point(0.97), angle)
@settings(max_examples=60)
def test_hit_point_on_claimed_segment(p, th):
    tri = dm.ideal_triangle(P)
    assume(dm.contains(tri, p))
    hit = dm.hitting_radius(tri, p, th)
    assume(not hit.infinite)
    seg = tri.segments[[s.id for s in tri.segments].index(hit.segment_id)]
    q = complex(*hit.hit_point)
    assert abs(abs(q - seg.center) - seg.radius) < 1e-9


@given(_square_point(), angle)
def test_hit_point_on_claimed_side_square(p, th):
    sq = dm.unit_square()
    hit = dm.hitting_radius(sq, p, th)
    x, y = hit.hit_point
    expected = {0: abs(y), 1: abs(x - 1), 2: abs(y - 1), 3: abs(x)}
    assert expected[hit.segment_id] < 1e-9


# --- construction -----------------------------------------------------------

def test_ideal_triangle_sides_are_orthogonal_arcs(triangle):
    assert len(triangle.segments) == 3 and len(triangle.ideal_vertices) == 3
    for s in triangle.segments:
        # orthogonal to the unit circle: |c|^2 = 1 + R^2
        assert abs(s.center) ** 2 == pytest.approx(1 + s.radius**2)


def test_unit_square_polygon():
    sq = dm.build_geodesic_polygon(ManifoldModel.euclidean(), [(0, 0), (1, 0), (1, 1), (0, 1)])
    assert [s.kind for s in sq.segments] == ["straight"] * 4
    assert sq.bbox == pytest.approx((0, 1, 0, 1))


def test_mixed_ideal_polygon():
    poly = dm.build_geodesic_polygon(P, [dm.ideal(0), dm.ideal(180), (0, -0.5)])
    assert len(poly.ideal_vertices) == 2
    assert dm.contains(poly, -0.2j) and not dm.contains(poly, 0.2j)
    pts = poly.boundary_points(32)
    assert np.all(~dm.contains(poly, pts))


def test_construction_errors():
    flat = ManifoldModel.euclidean()
    with pytest.raises(dm.DomainError, match="flat"):
        dm.build_geodesic_polygon(flat, [dm.ideal(0), (0, 1), (1, 1)])
    with pytest.raises(dm.DomainError, match="self-intersects"):
        dm.build_geodesic_polygon(flat, [(0, 0), (1, 1), (1, 0), (0, 1)])
    with pytest.raises(dm.DomainError):
        dm.build_geodesic_polygon(flat, [(0, 0), (1, 1)])
    with pytest.raises(dm.DomainError, match="closed-form"):
        dm.build_geodesic_polygon(ManifoldModel.custom("1+x^2"), [(0, 0), (1, 0), (0, 1)])
