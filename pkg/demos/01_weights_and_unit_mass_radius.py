"""Weights, their measures, and the unit-mass radius.

Walks through the geometry layer: evaluating densities, disc masses,
the unit-mass radius rho_L and how it shrinks with the scaling
parameter, plus the two regularity scans (doubling ratio and local
flatness) that tell the statistics layer which weights support which
experiments.
"""

import numpy as np

from gafsim import (Rect, RhoField, WeightSpec, dmu_approx,
                    doubling_ratio_scan, local_flatness_scan, mu_disc)

region = Rect(-1.0, 1.0, -1.0, 1.0)

print("=== disc masses ===")
for alpha in (2.0, 3.0, 4.0):
    w = WeightSpec.radial_power(alpha)
    m = mu_disc(w, 0.0, 0.7)
    print("alpha=%g: mu(D(0, 0.7)) = %.6f   (closed form %.6f)"
          % (alpha, m, np.pi * alpha * 0.7**alpha))
w_re = WeightSpec.re_square()
print("re_square: mu(D(0.3, 0.5)) = %.6f   (2 pi r^2 = %.6f)"
      % (mu_disc(w_re, 0.3, 0.5), 2 * np.pi * 0.25))

print("\n=== unit-mass radius rho_L ===")
for alpha in (2.0, 4.0):
    w = WeightSpec.radial_power(alpha)
    print("alpha=%g:" % alpha)
    for L in (1.0, 10.0, 100.0):
        fld = RhoField(w, L=L)
        print("  L=%-5g rho_L(0) = %.5f   rho_L(1+0.5j) = %.5f"
              % (L, fld.rho(0.0), fld.rho(1 + 0.5j)))

print("\nflat weight: rho(z)/rho_L(z) = sqrt(L) exactly:")
w2 = WeightSpec.radial_power(2.0)
print("  L=25: ratio = %.6f" % (RhoField(w2, 1.0).rho(0.4)
                                / RhoField(w2, 25.0).rho(0.4)))

print("\n=== the adapted distance (straight-segment value) ===")
fld4 = RhoField(WeightSpec.radial_power(4.0), L=5.0)
for pair in ((0.1, 0.9), (0.5 + 0.5j, -0.5 - 0.5j)):
    print("  d(%s, %s) ~ %.4f" % (pair[0], pair[1],
                                  dmu_approx(fld4, *pair)))

print("\n=== regularity scans ===")
for w, reg in ((WeightSpec.radial_power(2.0), region),
               (WeightSpec.radial_power(4.0), Rect(-0.4, 0.4, -0.4, 0.4)),
               (WeightSpec.re_square(), region)):
    ratio = doubling_ratio_scan(w, reg, [0.2, 0.4], grid_n=3)
    flat = local_flatness_scan(w, reg, grid_n=3)
    band = flat["max_ratio"] / flat["min_ratio"]
    print("%-24s doubling ratio <= %.3f   flatness band %.3f  %s"
          % (w.name, ratio, band,
             "(locally flat)" if band < 1.5 else "(NOT flat: normal-limit "
             "experiments refuse it)"))
