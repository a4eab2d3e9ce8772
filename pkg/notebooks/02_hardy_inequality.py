# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Hardy inequality with the mean hitting weight
#
# For test functions vanishing on the boundary we compare the Dirichlet energy
# with `(n/4) int f^2 / m^2`.  The report carries an error budget collecting the
# angular, spatial and capped-ray contributions; a ratio above `1 - budget`
# counts as consistent.

# %%
import numpy as np

from hardyscope import domain as dm
from hardyscope import hardy as hd
from hardyscope.manifold import ManifoldModel

quad = hd.DirectionQuadrature(720)
doms = [dm.unit_square(), dm.disk(), dm.geodesic_ball(ManifoldModel.poincare(), radius=1.0)]

# %%
for dom in doms:
    F = hd.weight_field(dom, 0.04, quad)
    reps = [hd.hardy_report(dom, f, F) for f in hd.test_function_suite(dom, 8)]
    worst = min(reps, key=lambda r: r.ratio)
    print(f"{dom.name:14s} min ratio {worst.ratio:.3f} ({worst.function}), budget {worst.quad_error_budget:.3f}")

# %% [markdown]
# ## Mixed boundary
#
# Only one side of the square counts as boundary.  Rays that leave through the
# other sides are ignored, so the restricted weight is at least the full one,
# and functions need only vanish near that side.

# %%
sq = dm.unit_square(gamma=[True, False, False, False])
G = hd.weight_field(sq, 0.04, quad, gamma_only=True)
F = hd.weight_field(sq, 0.04, quad)
print("m_gamma >= m everywhere:", bool(np.all(G.m >= F.m)))
for f in hd.test_function_suite(sq, 3, gamma_only=True):
    print(hd.hardy_report(sq, f, G).ratio)

# %% [markdown]
# ## One dimension
#
# On an interval the sharp constant is `1/4` with the distance to the nearest
# endpoint.

# %%
for f, iv in [(lambda x: x * (1 - x), (0, 1)), (lambda x: x * np.exp(-x), (0, np.inf))]:
    r = hd.hardy_1d(f, iv)
    print(f"energy {r.energy:.8f}  weighted {r.weighted:.8f}  ratio {r.ratio:.6f}")
