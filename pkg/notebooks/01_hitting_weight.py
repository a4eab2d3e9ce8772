# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Mean hitting weight
#
# For an interior point `p`, cast geodesic rays in every direction, record the
# two-sided hitting radius `r_p(v)` and average `1/r^2` over the circle of
# directions.  The weight is `m(p) = mean(1/r^2)^(-1/2)`.

# %%
import numpy as np

from hardyscope import domain as dm
from hardyscope import hardy as hd
from hardyscope.manifold import ManifoldModel

quad = hd.DirectionQuadrature(720)

# %% [markdown]
# In the half-plane `x > 0` only the wall at distance `d` is ever hit, and the
# average of `cos^2 / d^2` gives `m = sqrt(2) d` exactly.

# %%
hp = dm.half_plane()
for d in (0.1, 0.5, 2.0):
    m = hd.mean_hitting_weight(hp, complex(d, 0.3), quad)
    print(f"d = {d:4.1f}   m/d = {m / d:.6f}")

# %% [markdown]
# On the disk the weight equals the radius at the centre and dominates the
# boundary distance everywhere.

# %%
F = hd.weight_field(dm.disk(), 0.05, quad)
print("m(0) =", F.value_at(0j))
print("min m/d =", (F.m / F.d).min(), " max m/d =", (F.m / F.d).max())
print("largest angular error estimate:", F.rel_quad_error.max())

# %% [markdown]
# The same machinery works in the Poincare disk, where rays are circular arcs
# orthogonal to the unit circle.  Near a cusp of the ideal triangle the two
# sides look like parallel walls, so `m/d` again tends to `sqrt 2`.

# %%
tri = dm.ideal_triangle(ManifoldModel.poincare())
v = tri.ideal_vertices[0]
for j in (2, 6, 10):
    p = v * (1 - 2.0**-j)
    m = hd.mean_hitting_weight(tri, p, quad)
    print(f"gap 2^-{j:<2d}  m/d = {m / dm.boundary_distance(tri, p):.4f}")
