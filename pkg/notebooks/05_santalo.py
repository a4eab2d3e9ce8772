# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Santalo's formula by Monte Carlo
#
# The Liouville integral of `F` over unit tangent vectors is estimated two
# ways: by sampling phase space directly, and by sampling inward boundary
# vectors and integrating `F` along their orbits with the `cos` weight.

# %%
import numpy as np

from hardyscope import domain as dm
from hardyscope import flowcheck as fc
from hardyscope.manifold import ManifoldModel

cases = [
    (dm.disk(), fc.Integrand.constant()),
    (dm.unit_square(), fc.Integrand(lambda x, y, th: np.cos(th) ** 2 * (1 + x), "cos^2 (1+x)")),
    (dm.geodesic_ball(ManifoldModel.poincare(), radius=1.0), fc.Integrand.basepoint(lambda x, y: x * x, "x^2")),
]

# %%
for dom, F in cases:
    r = fc.santalo_compare(dom, F, 200_000, seed=0)
    print(f"{dom.name:14s} {F.name:12s} lhs {r.lhs:.4f} +- {r.stderr_lhs:.4f}   "
          f"rhs {r.rhs:.4f} +- {r.stderr_rhs:.4f}   z {r.z_score:.2f}")

# %% [markdown]
# Standard errors shrink like `n^-1/2`.

# %%
for n in (10_000, 40_000, 160_000):
    r = fc.santalo_compare(dm.disk(), fc.Integrand.constant(), n, seed=1)
    print(n, r.stderr_rhs)
