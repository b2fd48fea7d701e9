# %% [markdown]
# # Networks and plant identifier
#
# The gain networks and the identifier share one small perceptron class.
# This notebook checks its derivatives against finite differences, then
# trains an identifier online on a linear plant whose sensitivity is known.

# %%
import numpy as np

from vibrobot.identifier import jacobian_check, linear_plant_demo
from vibrobot.mlp import gradient_check

# %% [markdown]
# ## Derivative checks
#
# `gradient_check` compares the backpropagated gradient of a squared
# tracking error, taken through a fixed linear stand-in for the plant, with
# central differences on every weight. `jacobian_check` does the same for
# the identifier's output sensitivity to the latest input.

# %%
mlp_errors = [gradient_check(seed) for seed in range(20)]
ident_errors = [jacobian_check(seed) for seed in range(20)]
print(f"mlp gradient: worst relative error {max(mlp_errors):.2e}")
print(f"identifier jacobian: worst relative error {max(ident_errors):.2e}")

# %% [markdown]
# ## Learning a known plant
#
# The plant is `y(k) = 0.5 u(k-1)` with uniform random input. After 5000
# online steps the estimated sensitivity should sit near 0.5.

# %%
results = np.array([linear_plant_demo(seed) for seed in range(10)])
for seed, (J, mse, power) in enumerate(results):
    print(f"seed {seed}: J = {J:.4f}, prediction MSE = {100 * mse / power:.3f}% of output power")
