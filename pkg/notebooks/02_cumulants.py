# %% [markdown]
# # Cumulant generating function
#
# `E exp(theta N_t) = exp(nu int_0^t (F - 1))` where F solves a Volterra
# equation and tends to x(theta).  The limit gives eta(theta) = nu (x - 1)
# and the mod-phi constant psi(theta) = exp(nu int_0^inf (F - x)).

# %%
import math

import numpy as np

from hawkestail.cgf import (cgf_context, compute_psi, log_mgf, solve_F, solve_x,
                            theta_critical)
from hawkestail.kernel import ExponentialKernel, PowerLawKernel
from hawkestail.simulator import HawkesModel, event_counts

exp_model = HawkesModel(1.0, ExponentialKernel(1.0, 2.0))
pow_model = HawkesModel(1.0, PowerLawKernel(1.0, 3.0))
print("theta_c =", theta_critical(0.5))
for th in (0.05, 0.1, 0.15):
    print(f"theta={th}: x={solve_x(th, 0.5):.6f}")

# %% [markdown]
# F approaches x(theta) geometrically for the exponential kernel and like
# H(t) for the power law, which is why the power-law psi needs a tail model.

# %%
th = 0.1210154
x = solve_x(th, 0.5)
for m in (exp_model, pow_model):
    F = solve_F(th, m.kernel, 0.01, 60.0)
    print(type(m.kernel).__name__, [f"{x - F.at(s):.2e}" for s in (5, 10, 20, 40)])
    print("   psi =", compute_psi(th, m))

# %% [markdown]
# The finite-time mgf against plain Monte Carlo.

# %%
counts = event_counts(exp_model, 10.0, 100_000, seed=5)
for th in (0.05, 0.1):
    w = np.exp(th * counts)
    print(th, "MC", w.mean(), "+/-", w.std(ddof=1) / math.sqrt(w.size),
          "exact", math.exp(log_mgf(th, exp_model, 10.0)))

# %%
print(cgf_context(th, exp_model).summary())
