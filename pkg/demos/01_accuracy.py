# %% [markdown]
# # How accurate is the multipole evaluation?
#
# We compute the logarithmic potential of 10,000 unit charges in the unit
# square twice: once by brute force and once through the quadtree, for a
# range of expansion orders. The error should fall geometrically with p.

# %%
import time

import numpy as np

from fmm2d import build_tree, direct_solve, error_report, fmm_solve, uniform_particles

pos, q = uniform_particles(10_000, seed=0)
z = pos[:, 0] + 1j * pos[:, 1]

t0 = time.perf_counter()
exact = direct_solve(z, q)
print(f"direct sum: {time.perf_counter() - t0:.2f} s")

# %% [markdown]
# Only real parts are compared. The imaginary part of a complex log carries
# a branch choice, so it is not a physical quantity.

# %%
tree = build_tree(pos, q, depth=4)
for p in (4, 8, 12, 16, 20):
    t0 = time.perf_counter()
    approx = fmm_solve(tree, p)
    dt = time.perf_counter() - t0
    err = error_report(approx.real, exact.real)
    print(f"p={p:2d}  max_rel={err.max_rel:.2e}  rms_rel={err.rms_rel:.2e}  ({dt:.2f} s)")

# %% [markdown]
# Each added order buys roughly a factor of three. The field (the derivative
# of the potential) converges the same way but loses about one order,
# since differentiating the series amplifies its tail.

# %%
field_exact = direct_solve(z, q, "field")
for p in (8, 16):
    err = error_report(fmm_solve(tree, p, "field"), field_exact)
    print(f"field p={p:2d}  max_rel={err.max_rel:.2e}")
