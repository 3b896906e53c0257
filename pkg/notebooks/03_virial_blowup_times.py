# %% [markdown]
# # Virial identity and blow-up times
#
# ``d^2/dt^2 ||x u||^2 = 24 E - 4 ||grad u||^2 = 8 K - 6 L``.  Above the
# threshold the right side is bounded by a negative multiple of E(Q), so the
# variance is a concave parabola at worst and hits zero before
# ``t_b = r'(0) + sqrt(r'(0)^2 + 2 r(0))``.

# %%
import numpy as np

from hartree5d import (
    EvolutionConfig,
    VirialConfig,
    build_cutoff,
    build_grid,
    evolve,
    solve_ground_state,
    tb_finite_variance,
    tb_localized,
    tb_radial,
    variance,
)
from hartree5d.verify import virial_mismatch

gs = solve_ground_state(build_grid(4096, 30.0))

# %% [markdown]
# First the identity itself, along fixed-step runs.

# %%
for a in (0.9, 1.1):
    print(f"a={a}: max |V'' - (8K - 6L)| / max|8K - 6L| = {virial_mismatch(a * gs.field, 1e-3, 200):.2e}")

# %% [markdown]
# Now the estimate against the detected divergence onset.

# %%
for a in (1.05, 1.1, 1.2):
    tb = tb_finite_variance(variance(a * gs.field), 0.0, a * a, gs.e_ref)
    _, out = evolve(a * gs.field, EvolutionConfig(dt0=5e-4, t_max=3.0, record_stride=1000), gs)
    print(f"a={a}: t*={out.t:.4f}  t_b={tb:.4f}  {out.verdict.value}")

# %% [markdown]
# The localized estimates replace the variance by ``z_R`` and need R large
# enough.  The constant c in the remainder bound is not known; it is a
# parameter here (default 1) and reported with every answer.

# %%
phi = build_cutoff()
print(f"cutoff: phi'' dips to {-phi.dip:.3f}, plateau {phi.plateau:.4f}, support [0, {phi.s_out}]")
for R in (1.0, 3.0, 10.0, 20.0):
    cfg = VirialConfig(gamma=0.1, R=R)
    loc = tb_localized(1.1 * gs.field, 1.21, cfg, gs, phi)
    rad = tb_radial(1.1 * gs.field, 1.21, cfg, gs, phi)
    show = lambda res: f"{res.t_b:.4f}" if res.ok else f"fails ({res.failure.which})"
    print(f"R={R:5.1f}: localized {show(loc)}, radial {show(rad)} [needs R >= {rad.R_required:.2f}]")
