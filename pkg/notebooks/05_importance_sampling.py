# %% [markdown]
# # Importance sampling
#
# Scaling nu and h by gamma = x / (nu + ||h|| x) makes x the typical rate.
# The estimator reweights by exp(-theta*(N - xt) - (gamma-1) sum H(t - u_i)).

# %%
import time

from hawkestail import deviations as dev
from hawkestail.importance import is_tail, is_tail_adaptive, tilt_gamma
from hawkestail.kernel import ExponentialKernel
from hawkestail.simulator import HawkesModel, mc_tail

model = HawkesModel(1.0, ExponentialKernel(1.0, 2.0))
print("gamma at x=4, 5:", tilt_gamma(4.0, 1.0, 0.5), tilt_gamma(5.0, 1.0, 0.5))

# %%
for t in (5.0, 10.0):
    est = is_tail(model, t, 4.0, 50_000, seed=1)
    p, se = mc_tail(model, t, 4.0, 50_000, seed=2)
    print(f"t={t}: IS {est.estimate:.4e} +/- {est.std_error:.1e}   naive {p:.4e} +/- {se:.1e}")

# %% [markdown]
# At t=25 the naive estimator sees a handful of hits; IS is accurate.

# %%
start = time.perf_counter()
est = is_tail_adaptive(model, 25.0, 5.0, rel_tol=0.02, seed=3)
print(est, f"{time.perf_counter() - start:.1f}s")
print("order 2:", dev.ldp_tail(model, 25.0, 5.0))
