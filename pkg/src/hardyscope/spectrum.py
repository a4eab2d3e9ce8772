"""Dirichlet Laplace-Beltrami eigenvalues on conformal domains.

In two dimensions ``Delta_g = lam^-2 Delta``, so the discrete problem is the
pencil ``K u = mu M u`` with the flat 5-point stiffness ``K`` and the
diagonal mass ``M = diag(lam^2)``.  Nodes whose stencil leaves the domain
see a Dirichlet zero there (plain truncation, first order at curved
boundaries).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .domain import DomainError, DomainSpec
from .hardy import interior_nodes

MIN_NODES = 25


class EigenError(RuntimeError):
    """The eigensolver did not reach the requested residual."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass
class GridDiscretization:
    h: float
    ij: np.ndarray
    points: np.ndarray

    @property
    def n(self) -> int:
        return int(self.points.size)

    def index_of(self, i: int, j: int) -> int:
        hit = np.flatnonzero((self.ij[:, 0] == i) & (self.ij[:, 1] == j))
        return int(hit[0]) if hit.size else -1


@dataclass
class SparsePencil:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    h: float = float("nan")

    @property
    def shape(self):
        return self.stiffness.shape

    def to_triplets(self, path) -> None:
        """Coordinate-triplet text export: ``matrix row col value`` per nonzero (0-based)."""
        with open(path, "w") as fh:
            fh.write(f"# n {self.shape[0]}\n")
            for name, mat in (("K", self.stiffness), ("M", self.mass)):
                coo = mat.tocoo()
                order = np.lexsort((coo.col, coo.row))
                for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                    fh.write(f"{name} {r} {c} {v:.17g}\n")


def read_triplets(path) -> SparsePencil:
    rows = {"K": ([], [], []), "M": ([], [], [])}
    n = 0
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if parts[0] == "#":
                n = int(parts[2])
                continue
            r, c, v = rows[parts[0]]
            r.append(int(parts[1]))
            c.append(int(parts[2]))
            v.append(float(parts[3]))
    mk = lambda k: sp.csr_matrix((rows[k][2], (rows[k][0], rows[k][1])), shape=(n, n))  # noqa: E731
    return SparsePencil(mk("K"), mk("M"))


def assemble_pencil(dom: DomainSpec, h: float,
                    keep: Optional[Callable[[np.ndarray], np.ndarray]] = None):
    """Five-point stiffness and ``lam^2`` mass on the interior lattice nodes.

    ``keep`` optionally removes further nodes (used for cusp truncations);
    removed nodes act as Dirichlet zeros for their neighbours.
    """
    ij, z = interior_nodes(dom, h)
    if keep is not None:
        mask = np.asarray(keep(z), bool)
        ij, z = ij[mask], z[mask]
    n = z.size
    if n < MIN_NODES:
        raise DomainError(f"grid too coarse: {n} interior nodes (need at least {MIN_NODES})")
    lo = ij.min(axis=0) - 1
    span = ij.max(axis=0) - lo + 2
    key = (ij[:, 0] - lo[0]) * span[1] + (ij[:, 1] - lo[1])
    order = np.argsort(key)
    skey = key[order]
    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, 4.0 / h**2)]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nk = key + di * span[1] + dj
        pos = np.clip(np.searchsorted(skey, nk), 0, n - 1)
        found = skey[pos] == nk
        rows.append(np.flatnonzero(found))
        cols.append(order[pos[found]])
        vals.append(np.full(int(found.sum()), -1.0 / h**2))
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    M = sp.diags(dom.model.lam(z) ** 2, format="csr")
    return GridDiscretization(h, ij, z), SparsePencil(K, M, h)


@dataclass
class EigenResult:
    values: np.ndarray
    residual_norms: np.ndarray
    h: float
    vectors: Optional[np.ndarray] = field(default=None, repr=False)


def lowest_eigenvalues(pencil: SparsePencil, k: int = 1, tol: float = 1e-6, seed: int = 0,
                       return_vectors: bool = False) -> EigenResult:
    """Smallest ``k`` eigenvalues of ``K u = mu M u`` by shift-invert Lanczos about zero.

    The start vector is drawn from ``seed`` so repeated runs are identical.
    Residuals are ``|K u - mu M u| / |u|_M``.
    """
    K, M = pencil.stiffness, pencil.mass
    n = K.shape[0]
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < {n}")
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        vals, vecs = eigsh(K.tocsc(), k=k, M=M.tocsc(), sigma=0.0, which="LM", v0=v0, tol=0)
    except ArpackNoConvergence as exc:
        raise EigenError("eigensolver did not converge", (exc.eigenvalues, exc.eigenvectors)) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = np.array([np.linalg.norm(K @ vecs[:, i] - vals[i] * (M @ vecs[:, i]))
                    / np.sqrt(vecs[:, i] @ (M @ vecs[:, i])) for i in range(k)])
    if np.any(res > tol):
        raise EigenError(f"residuals {res} exceed tolerance {tol}", (vals, vecs))
    return EigenResult(vals, res, pencil.h, vecs if return_vectors else None)


def dirichlet_eigenvalues(dom: DomainSpec, h: float, k: int = 1, tol: float = 1e-6, seed: int = 0,
                          keep=None) -> EigenResult:
    """Assemble and solve in one call."""
    _, pencil = assemble_pencil(dom, h, keep)
    return lowest_eigenvalues(pencil, k, tol, seed)


# ---------------------------------------------------------------------------
# truncation studies on polygons with ideal vertices
# ---------------------------------------------------------------------------

@dataclass
class TruncationStudy:
    cut_levels: list
    h: float
    values: np.ndarray          # (levels, k)
    residuals: np.ndarray       # (levels, k)
    node_counts: list
    notes: list = field(default_factory=list)

    @property
    def diffs(self) -> np.ndarray:
        """``lambda(previous level) - lambda(level)``; the first row is NaN."""
        d = np.full(self.values.shape, np.nan)
        d[1:] = self.values[:-1] - self.values[1:]
        return d

    @property
    def monotone(self) -> bool:
        d = self.diffs[1:]
        return bool(np.all(d >= -1e-9 * np.abs(self.values[1:])))

    def cauchy(self, factor: float = 2.0, zero_tol: float = 1e-12) -> Optional[bool]:
        """Do successive differences shrink by ``factor`` per level (zeros count as converged)?"""
        d = np.abs(self.diffs[1:])
        if d.shape[0] < 2:
            return None
        scale = np.abs(self.values).max()
        ok = (d[1:] <= zero_tol * scale) | (d[1:] * factor <= d[:-1] + zero_tol * scale)
        return bool(np.all(ok))

    def rows(self):
        d = self.diffs
        for a, cut in enumerate(self.cut_levels):
            for b in range(self.values.shape[1]):
                yield cut, self.h, b + 1, self.values[a, b], d[a, b], self.residuals[a, b]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cut_level", "h", "k", "lambda", "diff", "residual"])
            for cut, h, k, lam, diff, res in self.rows():
                w.writerow([f"{cut:.12g}", f"{h:.12g}", k, f"{lam:.12g}",
                            "" if np.isnan(diff) else f"{diff:.6e}", f"{res:.3e}"])


def _neighbours(ij: np.ndarray) -> np.ndarray:
    """``(n, 4)`` indices of the +x, -x, +y, -y lattice neighbours (-1 where absent)."""
    n = len(ij)
    lo = ij.min(axis=0) - 1
    span = ij.max(axis=0) - lo + 2
    key = (ij[:, 0] - lo[0]) * span[1] + (ij[:, 1] - lo[1])
    order = np.argsort(key)
    skey = key[order]
    out = np.full((n, 4), -1)
    for c, off in enumerate((span[1], -span[1], 1, -1)):
        pos = np.clip(np.searchsorted(skey, key + off), 0, n - 1)
        found = skey[pos] == key + off
        out[found, c] = order[pos[found]]
    return out


def _resolved_nodes(ij: np.ndarray) -> np.ndarray:
    """Mask of the largest node subset in which every node has a neighbour along both axes,
    restricted to its largest connected component.

    Nodes failing the axis test sit in channels one lattice cell wide, where
    the domain is narrower than the lattice resolves.  Both steps are
    monotone under inclusion of node sets.
    """
    nb = _neighbours(ij)
    keep = np.ones(len(ij), dtype=bool)
    while True:
        live = np.where(nb >= 0, keep[np.maximum(nb, 0)], False)
        ok = keep & (live[:, 0] | live[:, 1]) & (live[:, 2] | live[:, 3])
        if np.array_equal(ok, keep):
            break
        keep = ok
    if not keep.any():
        return keep
    idx = np.flatnonzero(keep)
    remap = np.full(len(ij), -1)
    remap[idx] = np.arange(idx.size)
    sub = remap[nb[idx]]
    r, c = np.nonzero(sub >= 0)
    graph = sp.csr_matrix((np.ones(r.size), (r, sub[r, c])), shape=(idx.size, idx.size))
    _, labels = connected_components(graph, directed=False)
    keep[idx] = labels == np.argmax(np.bincount(labels))
    return keep


def truncation_study(polygon: DomainSpec, cut_levels: Sequence[float], h: float, k: int = 3,
                     seed: int = 0, tol: float = 1e-6, resolved_only: bool = True) -> TruncationStudy:
    """Eigenvalues of the polygon with chart disks of radius ``cut`` removed around each ideal vertex.

    All levels use the same lattice, so the discrete domains are nested and
    each eigenvalue is nonincreasing as the cuts shrink.  With
    ``resolved_only`` each level keeps only nodes with a neighbour along both
    axes, restricted to the main connected body.  Cusp tips narrower than the
    lattice otherwise leave one-cell channels and fragments whose modes sit
    near ``4 / (h lam)^2`` and swamp the eigenvalues sought.  Both rules are
    monotone under inclusion, so the levels stay nested.  Dropped node counts
    go to the notes.
    """
    ideal = np.array(polygon.ideal_vertices, complex)
    if ideal.size == 0:
        raise DomainError("truncation study needs at least one ideal vertex")
    vals, ress, counts, levels, notes = [], [], [], [], []
    ij_all, z_all = interior_nodes(polygon, h)
    for cut in cut_levels:
        outside_cut = np.all(np.abs(z_all[:, None] - ideal) > cut, axis=-1)
        ij, z = ij_all[outside_cut], z_all[outside_cut]
        dropped = 0
        if resolved_only and z.size:
            mask = _resolved_nodes(ij)
            dropped = int(z.size - mask.sum())
            ij, z = ij[mask], z[mask]
        selected = np.sort(ij[:, 0].astype(np.int64) * 2**32 + ij[:, 1])

        def keep(pts, sel=selected):
            k = np.rint(pts.real / h).astype(np.int64) * 2**32 + np.rint(pts.imag / h).astype(np.int64)
            return np.isin(k, sel, assume_unique=False)

        try:
            _, pencil = assemble_pencil(polygon, h, keep)
        except DomainError as exc:
            notes.append(f"cut {cut:g} skipped: {exc}")
            continue
        if dropped:
            notes.append(f"cut {cut:g}: dropped {dropped} under-resolved cusp nodes")
        r = lowest_eigenvalues(pencil, k, tol, seed)
        vals.append(r.values)
        ress.append(r.residual_norms)
        counts.append(pencil.shape[0])
        levels.append(float(cut))
    if not levels:
        raise DomainError("every cut level removed all interior nodes")
    return TruncationStudy(levels, h, np.array(vals), np.array(ress), counts, notes)


def variable_curvature_model(depth: float = 0.4):
    """Conformal model on the unit disk with ``lam = 2 exp(-depth u) / u``, ``u = 1 - |z|^2``.

    For ``depth = 0.4`` the curvature ranges over about ``[-3.12, -1]``, tending
    to ``-1`` at the ideal boundary, so ideal vertices remain cusps.
    """
    from .manifold import ManifoldModel

    expr = f"2*exp(-{depth!r}*(1-x^2-y^2))/(1-x^2-y^2)"
    return ManifoldModel.custom(expr, chart_radius=1.0)
