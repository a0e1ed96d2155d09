"""Expressibility of a two-qubit HEA as depth grows, and the variance bound it implies."""
from bpgorge import build_hea, layer_slot
from bpgorge.expressibility import epsilon, expressibility_report, two_copy
from bpgorge.experiments import expressibility_cost
from bpgorge.shiftgrad import gradient_samples
from bpgorge.statevector import z_string
from bpgorge.stats import ensemble_stats

zz = two_copy(z_string(2, (0, 1)).matrix())
for depth in (1, 2, 5, 10, 50):
    eps = epsilon(build_hea(2, depth), zz, 2000, 0, adjoint=True)
    print(f"D={depth:3d}  eps_O = {eps.value:.3f} +/- {eps.std_error:.3f}")

print()
for depth in (2, 20):
    spec = expressibility_cost(2, depth)
    j = layer_slot(spec.circuit, "middle")
    rep = expressibility_report(spec, j, 2000, 0)
    measured = ensemble_stats(gradient_samples(spec, j, 2000, 0)).variance
    print(f"D={depth:3d}  measured Var = {measured:.4f}   Haar value = {rep.haar_variance.variance:.4f}"
          f"   bound = {rep.bound_rhs:.4f}")
