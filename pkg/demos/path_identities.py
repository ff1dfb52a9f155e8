# Walk through the quality-time path numerically.
#
# A sample at quality level t sits at exp(-t)*x0 + (1 - exp(-t))*x_inf.
# Below we check, for a couple of hand-picked levels, that interpolating
# between two levels lands back on the path, and that the simulated
# velocity target agrees with the path velocity.

import math

import numpy as np

from relflow.cot_path import component_residual, composed_coefficient, conditional_point, lambda_weight
from relflow.svf import target_velocity

x0 = np.array([0.0, 2.0])     # noise end
x_inf = np.array([1.0, -1.0])  # clean end

for t in (0.0, 0.5, 1.0, 3.0, 10.0):
    print(f"t={t:4.1f}  point {conditional_point(x0, x_inf, t)}")

# relative path between levels 0.5 and 2.0, evaluated at 1.2
seg = (0.5, 1.2, 2.0)
print("\nweight on the t=0.5 sample:", round(lambda_weight(seg), 6))
print("gap to the absolute path:", component_residual(x0, x_inf, seg))

# chaining 0.5 -> 1.0 -> 2.0 gives the same weight as going 0.5 -> 2.0
print("chained weight:", composed_coefficient(0.5, 1.0, 2.0, 1.2))

# velocity target from two neighbouring levels
t, dt = 1.5, 0.3
noisy = conditional_point(x0, x_inf, t - dt)
clean = conditional_point(x0, x_inf, t)
v = target_velocity(noisy, clean, dt)
print("\ntarget", v)
print("exp(-t)*(x_inf - x0)", math.exp(-t) * (x_inf - x0))
print("x_inf - clean", x_inf - clean)
