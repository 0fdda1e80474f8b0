# %% [markdown]
# # Precise large, central and moderate deviations

# %%
import math

from hawkestail import deviations as dev
from hawkestail.kernel import ExponentialKernel
from hawkestail.simulator import HawkesModel

model = HawkesModel(1.0, ExponentialKernel(1.0, 2.0))
for x in (3.0, 4.0, 5.0):
    sd = dev.SaddleData.of(model, x)
    print(f"x={x}: theta*={sd.theta_star:.7f} I={sd.I:.7f} I''={sd.I2:.6f}")

# %% [markdown]
# First- and second-order tail approximations.  Near t=5 the 1/t correction
# is large enough to flip the sign at x=4: the series is asymptotic.

# %%
for t in (5, 10, 25, 40, 50):
    print(t, [f"{dev.ldp_tail(model, t, x, o):.3e}" for x in (4.0, 5.0) for o in (1, 2)])

# %%
print("point P(N_25 = 100):", dev.ldp_point(model, 25.0, 4.0))

# %% [markdown]
# CLT and MDP.  The cubic MDP form agrees with the m=4 truncation.

# %%
print("clt:", dev.clt_tail(model, 10.0, 1.96), "threshold", dev.clt_threshold(model, 10.0, 1.96))
t = 1e4
y = t ** 0.2
print("mdp:", dev.mdp_tail(model, t, y), dev.mdp_tail(model, t, y, m=4),
      "gaussian:", math.erfc(y / math.sqrt(2)) / 2)
