# %% [markdown]
# # Derivative ladders and expansion coefficients
#
# Faa di Bruno over integer partitions turns the fixed-point and Volterra
# equations into recursions for derivatives in theta.  These feed the
# coefficients a_k (point probabilities) and b_k (tails).

# %%
from fractions import Fraction

from hawkestail.deviations import theta_star
from hawkestail.expansion import (a1_closed, bell, build_context, coeff_a, partitions,
                                  x_derivatives, x_derivatives_closed)
from hawkestail.cgf import solve_x
from hawkestail.kernel import ExponentialKernel
from hawkestail.simulator import HawkesModel

print([len(partitions(n)) for n in range(1, 9)])  # p(n)
print(partitions(4).tuples)
print("complete Bell B_4 at g=1:", bell(4, [Fraction(1)] * 5))

# %% [markdown]
# x ladder at x=4: recursion vs closed forms.  The fourth derivative is
# 26244; the weight-3 variant gives 21708.

# %%
th = theta_star(4.0, 1.0, 0.5)
print(x_derivatives(th, solve_x(th, 0.5), 0.5, 4))
print(x_derivatives_closed(4.0, 1.0, 0.5))

# %%
model = HawkesModel(1.0, ExponentialKernel(1.0, 2.0))
ctx = build_context(model, 4.0)
print("psi ladder:", ctx.psi_derivs)
print("a:", ctx.a, " b:", ctx.b)
print("a1 closed form:", a1_closed(ctx.psi_derivs, ctx.eta_derivs))
print("c0, c1 =", ctx.c0, ctx.c1)
print("with printed x'''' weight:", build_context(model, 4.0, x4_weight=3).c1)

# %% [markdown]
# Sanity check on a Poisson cumulant: the a_k reproduce Stirling's series.

# %%
n = 7.0
print(coeff_a([1, 0, 0, 0, 0], [0] + [n] * 6, 1), -1 / (12 * n))
