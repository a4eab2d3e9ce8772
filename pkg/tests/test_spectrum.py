import numpy as np
import pytest
import scipy.sparse as sparse
from hypothesis import given, settings
from hypothesis import strategies as st

from hardyscope import domain as dm
from hardyscope import hardy as hd
from hardyscope import spectrum as sp
from hardyscope.manifold import ManifoldModel, curvature

P = ManifoldModel.poincare()
BESSEL_J01_SQ = 2.404825557695773**2


# --- assembly ---------------------------------------------------------------

def test_unit_square_pencil():
    grid, pen = sp.assemble_pencil(dm.unit_square(), 0.1)
    assert grid.n == 81
    np.testing.assert_allclose(pen.stiffness.diagonal(), 400.0)
    np.testing.assert_array_equal(pen.mass.diagonal(), 1.0)


def test_poincare_mass_entry():
    grid, pen = sp.assemble_pencil(dm.geodesic_ball(P, radius=2.0), 0.1)
    k = grid.index_of(5, 0)
    assert k >= 0
    assert pen.mass[k, k] == pytest.approx(64 / 9, rel=1e-14)


def test_disk_node_count():
    # oracle: integer pairs strictly inside the circle of radius 20
    i = np.arange(-20, 21)
    I, J = np.meshgrid(i, i)
    grid, _ = sp.assemble_pencil(dm.disk(), 0.05)
    assert grid.n == int(np.sum(I**2 + J**2 < 400))


def test_too_coarse_grid():
    with pytest.raises(dm.DomainError, match="interior nodes"):
        sp.assemble_pencil(dm.unit_square(), 0.3)


def test_flat_pencil_is_plain_laplacian():
    grid, pen = sp.assemble_pencil(dm.unit_square(), 1 / 16)
    n = 15
    T = sparse.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    L = (sparse.kron(T, sparse.eye(n)) + sparse.kron(sparse.eye(n), T)) * 256
    # lattice nodes come out in (i, j) lexicographic order
    order = np.lexsort((grid.ij[:, 1], grid.ij[:, 0]))
    K = pen.stiffness[order][:, order]
    assert (K != L).nnz == 0
    assert (pen.mass != sparse.eye(grid.n)).nnz == 0


def test_pencil_symmetric_positive(triangle):
    _, pen = sp.assemble_pencil(triangle, 0.05)
    assert abs(pen.stiffness - pen.stiffness.T).max() == 0
    assert np.all(pen.mass.diagonal() > 0)


def test_triplet_roundtrip(tmp_path):
    _, pen = sp.assemble_pencil(dm.geodesic_ball(P, radius=1.0), 0.1)
    path = tmp_path / "pencil.txt"
    pen.to_triplets(path)
    back = sp.read_triplets(path)
    assert (back.stiffness != pen.stiffness).nnz == 0
    assert (back.mass != pen.mass).nnz == 0
    assert path.read_text().startswith(f"# n {pen.shape[0]}\n")


# --- eigenvalues ------------------------------------------------------------

def test_unit_square_convergence():
    lam = [sp.dirichlet_eigenvalues(dm.unit_square(), h).values[0] for h in (1 / 32, 1 / 64, 1 / 128)]
    assert lam[-1] == pytest.approx(2 * np.pi**2, rel=1e-2)
    d1, d2 = lam[1] - lam[0], lam[2] - lam[1]
    assert abs(d1) / abs(d2) >= 3


def test_unit_disk():
    lam = sp.dirichlet_eigenvalues(dm.disk(), 1 / 128).values[0]
    assert lam == pytest.approx(BESSEL_J01_SQ, rel=1e-2)


def test_rectangle():
    lam = sp.dirichlet_eigenvalues(dm.rectangle(0, 1, 0, 2), 1 / 64).values[0]
    assert lam == pytest.approx(np.pi**2 * 1.25, rel=1e-2)


def test_residuals_and_reproducibility():
    _, pen = sp.assemble_pencil(dm.disk(), 1 / 32)
    a = sp.lowest_eigenvalues(pen, 3, seed=1)
    b = sp.lowest_eigenvalues(pen, 3, seed=1)
    c = sp.lowest_eigenvalues(pen, 3, seed=2)
    assert np.all(a.residual_norms < 1e-6)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_allclose(a.values, c.values, rtol=1e-9)
    assert np.all(np.diff(a.values) >= 0) and np.all(a.values > 0)


def test_eigen_error_carries_partial():
    _, pen = sp.assemble_pencil(dm.disk(), 1 / 16)
    with pytest.raises(sp.EigenError) as exc:
        sp.lowest_eigenvalues(pen, 2, tol=1e-300)
    assert exc.value.partial is not None


def test_k_bounds():
    _, pen = sp.assemble_pencil(dm.unit_square(), 0.1)
    with pytest.raises(ValueError):
        sp.lowest_eigenvalues(pen, 81)


def test_croke_below_first_eigenvalue(unit_disk):
    q = hd.DirectionQuadrature(360)
    g = np.linspace(-0.6, 0.6, 7)
    pts = (g[:, None] + 1j * g[None, :]).ravel()
    pts = pts[np.abs(pts) < 0.95]
    assert hd.croke_bound(unit_disk, q, pts).bound <= sp.dirichlet_eigenvalues(unit_disk, 1 / 64).values[0]
    sq_pts = 0.5 + 0.5j + 0.7 * pts
    assert hd.croke_bound(dm.unit_square(), q, sq_pts).bound <= \
        sp.dirichlet_eigenvalues(dm.unit_square(), 1 / 64).values[0]


@given(st.floats(0.3, 0.95), st.floats(0.3, 0.95))
@settings(max_examples=8, deadline=None)
def test_domain_monotonicity(r1, r2):
    small, big = sorted((r1, r2))
    lam_s = sp.dirichlet_eigenvalues(dm.disk(radius=small), 1 / 32, k=3).values
    lam_b = sp.dirichlet_eigenvalues(dm.disk(radius=big), 1 / 32, k=3).values
    assert np.all(lam_s >= lam_b - 1e-6)


# --- truncation -------------------------------------------------------------

@pytest.fixture(scope="module")
def study(triangle):
    return sp.truncation_study(triangle, [2.0**-j for j in range(1, 6)], 1 / 128, k=3)


def test_truncation_monotone_cauchy(study):
    assert study.values.shape == (5, 3)
    assert study.monotone and study.cauchy()
    assert np.all(study.values > 0) and np.all(study.residuals < 1e-6)
    assert study.node_counts == sorted(study.node_counts)


def test_truncation_csv(tmp_path, study):
    path = tmp_path / "conv.csv"
    study.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cut_level,h,k,lambda,diff,residual"
    assert len(lines) == 1 + 15
    assert lines[1].split(",")[4] == ""


def test_single_cut_level(triangle):
    s = sp.truncation_study(triangle, [0.25], 1 / 32, k=2)
    assert s.values.shape == (1, 2)
    assert s.cauchy() is None


def test_cut_removing_everything(triangle):
    s = sp.truncation_study(triangle, [5.0, 0.25], 1 / 32, k=1)
    assert s.cut_levels == [0.25]
    assert "skipped" in s.notes[0]


def test_truncation_needs_ideal_vertex():
    with pytest.raises(dm.DomainError):
        sp.truncation_study(dm.unit_square(), [0.1], 0.05)


def test_resolved_nodes_drop_channels():
    # a 5x5 block with a one-cell tail and a detached node
    block = [(i, j) for i in range(5) for j in range(5)]
    tail = [(5, 2), (6, 2), (7, 2)]
    ij = np.array(block + tail + [(20, 20)])
    keep = sp._resolved_nodes(ij)
    assert keep[:25].all() and not keep[25:].any()


def test_variable_curvature_model():
    V = sp.variable_curvature_model()
    r = 0.95 * np.sqrt(np.linspace(0, 1, 200))
    a = np.linspace(0, 40, 200)
    K = curvature(V, np.stack([r * np.cos(a), r * np.sin(a)], axis=-1))
    assert np.all(K >= -4) and np.all(K <= -1)
