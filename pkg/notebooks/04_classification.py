# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Certifying discrete spectrum
#
# Two numerical probes feed the verdict: deep sets `{d >= eps}` must stay
# bounded, and `m/d` must stay bounded, including along paths into each cusp.

# %%
from hardyscope import classify as cl
from hardyscope import domain as dm
from hardyscope.manifold import ManifoldModel

# %%
for dom in (dm.ideal_triangle(ManifoldModel.poincare()), dm.strip(), dm.disk()):
    cert = cl.classify_domain(dom)
    print(f"{dom.name:15s} {cert.verdict}")
    if cert.bdr:
        print("   c estimate", round(cert.bdr["c_estimate"], 4))
        for seq in cert.bdr["cusp_sequences"]:
            print("   cusp m/d:", [round(x, 3) for x in seq[::5]])

# %% [markdown]
# The geometric sufficient conditions can be probed directly: interior cone
# apertures and exterior balls.

# %%
sq = dm.unit_square()
print("interior cone aperture near an edge:", cl.uic_check(sq, 0.5 + 0.05j, 2.0))
print("exterior ball at the edge midpoint:", cl.ueb_check(sq, 0.5 + 0j, 0.5))
