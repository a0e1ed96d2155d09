"""Shift-rule derivatives against central differences on random HEA instances."""
import numpy as np

from bpgorge import build_hea, central_difference, gradient, hea_zz_cost, partial_derivative
from bpgorge.seeding import stream, uniform_parameters

rng = stream(0, "demo")
for n, depth in [(2, 3), (4, 10), (6, 20)]:
    spec = hea_zz_cost(n, depth)
    theta = uniform_parameters(rng, 1, spec.num_parameters)[0]
    gaps = [abs(partial_derivative(spec, theta, j) - central_difference(spec, theta, j))
            for j in range(0, spec.num_parameters, max(1, spec.num_parameters // 10))]
    print(f"n={n} D={depth:2d} m={spec.num_parameters:4d}  max gap {max(gaps):.1e}")

# the full gradient costs 2m evaluations
spec = hea_zz_cost(3, 2)
g = gradient(spec, np.zeros(spec.num_parameters))
print("gradient at theta=0:", np.round(g, 6))
print("circuit slots:", build_hea(3, 2).num_parameters)
