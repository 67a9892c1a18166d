"""The Poisson baseline, and how Gaussian zero sets differ from it.

First calibrates the harness against the exact Poisson laws (mean and
variance of the smoothed count are closed-form), then runs the
normal-limit diagnostics for the zero process: standardized smooth
statistics drift toward N(0,1) as L grows, provided the weight is
locally flat.
"""

import time

import numpy as np

from gafsim import (NotLocallyFlat, parse_config,
                    normality_experiment, poisson_baseline_experiment)

print("=== Poisson calibration (exact laws) ===")
config = parse_config({
    "experiment": "poisson_baseline",
    "weight": {"kind": "radial_power", "alpha": 2.0},
    "L_grid": [20.0],
    "trials": 8000,
    "region": {"xmin": -1.0, "xmax": 1.0, "ymin": -1.0, "ymax": 1.0},
    "psi": {"kind": "gaussian_bump", "center": [0.0, 0.0], "width": 0.12},
    "seeds": {"master": 4},
    "intensity_scale": 1.0,
})
t0 = time.time()
rep = poisson_baseline_experiment(config)
row = rep.per_L[0]
print("mean: %.5f vs %.5f   var: %.3e vs %.3e   disjoint corr: %+.4f  "
      "(%.1fs)" % (row["mean"], row["theory_mean"], row["var"],
                   row["theory_var"], row["disjoint_corr"],
                   time.time() - t0))

print("\n=== normal-limit diagnostics for the zero process ===")
norm_cfg = parse_config({
    "experiment": "normality",
    "weight": {"kind": "radial_power", "alpha": 2.0},
    "gaf_form": "basis",
    "L_grid": [8.0, 16.0, 32.0],
    "trials": 700,
    "region": {"xmin": -0.8, "xmax": 0.8, "ymin": -0.8, "ymax": 0.8},
    "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 0.5},
    "seeds": {"master": 6},
})
t0 = time.time()
rep = normality_experiment(norm_cfg)
print("flatness band: %.4f (must stay below 1.5)"
      % rep.notes["flatness_band"])
for row in rep.per_L:
    print("L=%-4g KS distance %.4f (p=%.3f)   skew %+.3f+-%.3f   "
          "kurtosis %+.3f+-%.3f"
          % (row["L"], row["ks_stat"], row["ks_p"], row["skew"],
             row["skew_se"], row["kurtosis"], row["kurtosis_se"]))
print("(%.0fs)" % (time.time() - t0))

print("\n=== the same request on a weight that is not locally flat ===")
try:
    normality_experiment(parse_config(dict(norm_cfg.raw,
                                           weight={"kind": "radial_power",
                                                   "alpha": 4.0})))
except NotLocallyFlat as exc:
    print("refused, as it must be: %s" % exc)
