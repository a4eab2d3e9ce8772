# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Dirichlet eigenvalues of conformal metrics
#
# The five-point stiffness matrix is conformally invariant in two dimensions;
# the metric enters only through the lumped mass `lam^2 h^2`.

# %%
import numpy as np
from scipy.special import jn_zeros

from hardyscope import domain as dm
from hardyscope import hardy as hd
from hardyscope import spectrum as sp
from hardyscope.manifold import ManifoldModel

# %%
for h in (1 / 32, 1 / 64, 1 / 128):
    lam = sp.dirichlet_eigenvalues(dm.unit_square(), h).values[0]
    print(f"h = 1/{round(1 / h):<4d} lambda_1 = {lam:.6f}  error {lam - 2 * np.pi**2:.2e}")
print("disk:", sp.dirichlet_eigenvalues(dm.disk(), 1 / 128).values[0], "vs", jn_zeros(0, 1)[0] ** 2)

# %% [markdown]
# The chord-length fiber integral gives a lower bound for `lambda_1`.

# %%
_, pts = hd.interior_nodes(dm.disk(), 0.05)
print("fiber bound", hd.croke_bound(dm.disk(), hd.DirectionQuadrature(720), pts).bound)

# %% [markdown]
# ## Truncating an ideal triangle
#
# The triangle has infinite area but its cusps carry little of a low
# eigenfunction.  Cutting each cusp at chart distance `2^-j` from its vertex
# gives nested domains whose eigenvalues decrease and settle.

# %%
tri = dm.ideal_triangle(ManifoldModel.poincare())
study = sp.truncation_study(tri, [2.0**-j for j in range(1, 6)], 1 / 128, k=3)
for cut, vals in zip(study.cut_levels, study.values):
    print(f"cut {cut:<8g}", np.round(vals, 5))
print("monotone", study.monotone, " cauchy", study.cauchy())

# %% [markdown]
# The same polygon under a metric whose curvature varies in `[-4, -1]`.

# %%
V = sp.variable_curvature_model()
study = sp.truncation_study(tri.with_model(V), [2.0**-j for j in range(1, 6)], 1 / 128, k=3)
print(np.round(study.values[-1], 4), study.monotone, study.cauchy())
