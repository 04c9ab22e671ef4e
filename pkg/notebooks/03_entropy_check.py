# %% [markdown]
# # Telling an admissible shock from a fake one
#
# Both a viscous shock and a jump from 0 up to 1 moving at speed 1/2 are
# weak solutions of the Burgers problem. Only the first satisfies the
# entropy inequality. We integrate the inequality against cone test
# functions and compare the signs.

# %%
import numpy as np

from anisovisc import (ConeSpec, Cutoff, SolverConfig, TimeSpec, TimeWindow, advance,
                       build_test_function, burgers,
                       lipschitz_bound, make_grid, project_initial, travelling_jump_history)
from anisovisc.entropy import constant, entropy_residual_terms

grid = make_grid(-1, 1, -4, 4, 16, 512)
model = burgers()
u0 = project_initial(lambda x, y: np.where(y < 0, 1.0, 0.0), grid)
run = advance(u0, model, SolverConfig(epsilon=0.01), TimeSpec(1.0))
fake = travelling_jump_history(grid, 0.0, 1.0, 0.5, run.times)

M = lipschitz_bound(model, -1e-6, 1 + 1e-6)
phi = build_test_function(Cutoff(0.4), TimeWindow(0.1, 0.9, 0.05, 1.0), ConeSpec(2.0, M), 4.0, grid)
print("support volume", phi.support_volume())

# %%
for c in (0.25, 0.5, 0.75):
    for name, hist in (("viscous", run), ("fake", fake)):
        terms = entropy_residual_terms(hist, model, constant(c), phi)
        print(f"psi={c} {name:8s}", {k: round(v, 5) for k, v in terms.items()},
              "total", round(sum(terms.values()), 5))

# %% [markdown]
# The flux term carries the sign. For the fake jump the characteristics
# leave the discontinuity, so the flux through the cone boundary has the
# wrong sign and the total drops below zero.
