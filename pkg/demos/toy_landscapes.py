"""Four closed-form landscapes, one per plateau/gorge combination.

Prints a coarse cross-section of each along the diagonal, then the sampled
plateau and gorge labels with the fitted decay bases.
"""
import numpy as np

from bpgorge import AnalyticLandscape, Kind, classify_quadrant
from bpgorge.landscapes import cross_section

ts = np.linspace(0, 2 * np.pi, 9)
print("t/pi      " + " ".join(f"{t / np.pi:5.2f}" for t in ts))
for kind in Kind:
    vals = cross_section(AnalyticLandscape(kind, 4), ts)
    print(f"{kind.value:18s}" + " ".join(f"{v:5.2f}" for v in vals))

print()
for kind in Kind:
    rep = classify_quadrant(kind, gradient_samples=20000, tail_samples=200000, seed=1)
    b = f"{rep.gradient_fit.base:.2f}" if rep.gradient_fit else "-"
    print(f"{kind.value:18s} plateau={rep.barren_plateau:14s} gorge={rep.narrow_gorge:4s} gradient base={b}")
    for n, p, se in rep.tail_points:
        print(f"    n={n:2d}  P(|C - mean| >= 1/2) = {p:.4f} +/- {se:.4f}")
