# %% [markdown]
# # How fast does the added viscosity wash out?
#
# Adding eps * u_yy smooths the front. We measure the L1 distance to the
# eps = 0 run inside a shrinking cone and fit a log-log slope. The theory
# asks for at least 1/2. A single shock in 1D usually gives close to 1.

# %%
import numpy as np

from anisovisc import (ConeSpec, SolverConfig, TimeSpec, advance, burgers, cone_l1_error,
                       lipschitz_bound, make_grid, project_initial, rate_fit)

grid = make_grid(-1, 1, -4, 4, 16, 1024)
u0 = project_initial(lambda x, y: np.where(y < 0, 1.0, 0.0), grid)
model = burgers()
cone = ConeSpec(3.0, lipschitz_bound(model, -1e-6, 1 + 1e-6))

ref = advance(u0, model, SolverConfig(record_every=10**9), TimeSpec(1.0)).final
pairs = []
for eps in (0.04, 0.02, 0.01, 0.005):
    run = advance(u0, model, SolverConfig(epsilon=eps, record_every=10**9), TimeSpec(1.0))
    pairs.append((eps, cone_l1_error(run.final, ref, cone, 1.0)))

# %%
fit = rate_fit(pairs)
print(fit.to_csv())
print(fit.summary())

# %% [markdown]
# Smooth data give a different picture. With a smoothed step of width 0.5
# the eps = 0 and eps > 0 solutions stay close and the error is roughly
# linear in eps for a different reason: no shock has formed yet.

# %%
smooth = project_initial(lambda x, y: 0.5 * (1 - np.tanh(y / 0.5)), grid)
ref = advance(smooth, model, SolverConfig(record_every=10**9), TimeSpec(0.5)).final
pairs = []
for eps in (0.04, 0.02, 0.01):
    run = advance(smooth, model, SolverConfig(epsilon=eps, record_every=10**9), TimeSpec(0.5))
    pairs.append((eps, cone_l1_error(run.final, ref, cone, 0.5)))
print(rate_fit(pairs).summary())
