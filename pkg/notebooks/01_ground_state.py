# %% [markdown]
# # The ground state and its identities
#
# Q is the positive radial solution of ``Q - Lap Q = (|x|^-3 * Q^2) Q`` in R^5.
# We compute it on a uniform radial grid, check the scaling identities it
# must satisfy, and look at how the sharp interaction constant compares with
# a few other profiles.

# %%
import math

import numpy as np

from hartree5d import build_grid, pohozaev_residuals, solve_ground_state
from hartree5d.ground_state import hls_quotient
from hartree5d.verify import hls_family

grid = build_grid(4096, 30.0)
gs = solve_ground_state(grid)
print(f"{gs.iterations} iterations, residual {gs.residual:.2e}")
print(f"M(Q) = {gs.mass:.8f}  ||grad Q||^2 = {gs.kinetic:.8f}  ||Q||_LV^4 = {gs.lv4:.8f}")

# %% [markdown]
# Multiplying the equation by Q and by ``x . grad Q`` gives
# ``L = 4K/3``, ``L = 4M`` and ``E = K/6``.  The discrete solution satisfies
# them up to an O(h^2) defect.

# %%
for name, res in zip(("L = 4K/3", "L = 4M", "E = K/6"), pohozaev_residuals(gs)):
    print(f"{name:10s} relative defect {res:.2e}")

# %% [markdown]
# Halving h should cut the defect by four.

# %%
for n in (1024, 2048, 4096):
    g = solve_ground_state(build_grid(n, 30.0))
    print(n, f"{g.lv4 / (4 * g.kinetic / 3) - 1:+.3e}")

# %% [markdown]
# Q maximizes ``||u||_LV^4 / (||u||_2 ||grad u||_2^3)``.  Every other field
# should land below the constant.

# %%
print(f"C_HLS = {gs.c_hls:.8f}")
for name, u in hls_family(grid).items():
    print(f"{name:20s} {hls_quotient(u) / gs.c_hls:.4f}")
print(f"{'Q':20s} {hls_quotient(gs.field) / gs.c_hls:.6f}")

# %%
r = np.asarray(grid.nodes)
for x in (0, 1, 2, 5, 10, 20):
    i = int(round(x / grid.h))
    print(f"Q({x:>2}) = {gs.profile[i]:.6e}")
# Q decays like exp(-r) / r^2, so the log-ratio over one unit near r = 20 is about 1 + 2/20
print("log Q(19)/Q(20) =", math.log(gs.profile[int(19 / grid.h)] / gs.profile[int(20 / grid.h)]))
