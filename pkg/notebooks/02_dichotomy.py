# %% [markdown]
# # Below the threshold: two disjoint regimes
#
# When ``M(u)E(u) < M(Q)E(Q)`` the normalized gradient
# ``eta = ||grad u|| ||u|| / (||grad Q|| ||Q||)`` cannot cross the band between
# the two roots of ``3 l^2 - 2 l^3 = M E / (M(Q) E(Q))``.  Scaled ground states
# make this explicit: for ``u = aQ`` the ratio is ``3a^4 - 2a^6`` and eta is ``a^2``.

# %%
import numpy as np

from hartree5d import EvolutionConfig, build_grid, classify, evolve, solve_ground_state

gs = solve_ground_state(build_grid(4096, 30.0))

for a in (0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 1.3):
    reg = classify(a * gs.field, gs)
    lm = "-" if reg.lambda_minus is None else f"{reg.lambda_minus:.4f}"
    lp = "-" if reg.lambda_plus is None else f"{reg.lambda_plus:.4f}"
    print(f"a={a:<5} ratio={reg.ratio:+.5f} eta0={reg.eta0:.4f} "
          f"lambda-={lm:>7} lambda={lp:>7} {reg.kind.value}")

# %% [markdown]
# Evolve 0.9 Q.  The solution disperses, eta falls, and it never comes back
# above 0.81.  Mass is conserved to round-off and energy to the splitting error.

# %%
samples, outcome = evolve(0.9 * gs.field, EvolutionConfig(dt0=5e-4, t_max=2.0, adaptive=False,
                                                           record_stride=200), gs)
print(outcome.verdict.value, outcome.t)
e0, m0 = samples[0].energy, samples[0].mass
for s in samples:
    print(f"t={s.t:5.2f} eta={s.eta:.5f} dE/E={s.energy / e0 - 1:+.2e} dM/M={s.mass / m0 - 1:+.1e}")

# %% [markdown]
# Evolve 1.1 Q.  eta starts at 1.21 and only grows, until the detector stops
# the run.

# %%
samples, outcome = evolve(1.1 * gs.field, EvolutionConfig(dt0=5e-4, t_max=2.0, record_stride=50), gs)
print(outcome.verdict.value, f"t*={outcome.t:.4f}", outcome.reason)
print("min eta along the run:", min(s.eta for s in samples))
