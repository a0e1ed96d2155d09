"""Gradient variance and cost-difference variance decay together.

Deep circuits (D = 60) concentrate exponentially in n; shallow ones (D = 5)
do not. Both series are fitted and the summary is printed. This takes a
minute or two; pass a smaller ensemble for a quicker look.
"""
import sys

from bpgorge import experiments as ex

ensemble = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
cfg = ex.make_config("compare", {}, {"n_list": (2, 4, 6, 8), "depth_list": (5, 60),
                                     "ensemble_size": ensemble, "seed": 7})
report = ex.run_compare(cfg)
for depth in cfg.depth_list:
    print(f"D = {depth}")
    for (n, g, _), (_, d, _) in zip(ex.series(report.records, "grad_var_max", depth),
                                    ex.series(report.records, "diff_var", depth)):
        print(f"  n={n:2d}  Var[dC]={g:.3e}  Var[C(a)-C(b)]={d:.3e}")
print("\n".join(report.summary_lines()))
