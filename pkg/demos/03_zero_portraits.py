"""Drawing zero sets and checking the counting machinery on itself.

Samples one GAF per construction (basis and frame), locates its zeros
two independent ways, and writes portrait CSVs that plot directly. If
matplotlib is importable a scatter portrait is saved too.
"""

import os

import numpy as np

from gafsim import (Disc, Rect, RhoField, WeightSpec, build_basis,
                    count_zeros_argument, locate_zeros,
                    locate_zeros_polyroots, make_basis_kernel,
                    make_frame_kernel, make_sampling_sequence,
                    sample_basis_gaf, sample_frame_gaf)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

L = 30.0
disc = Disc(0.0, 1.0)

print("=== basis draw ===")
b = build_basis(2.0, L, 1.55)
km = make_basis_kernel(b)
s = sample_basis_gaf(km, seed=2024)
zs = locate_zeros(s, disc)
oracle = locate_zeros_polyroots(s, disc)
print("winding count: %d, located: %d, companion-matrix oracle: %d"
      % (count_zeros_argument(s, disc), len(zs), len(oracle)))
print("max |subdivision - oracle| = %.2e"
      % np.max(np.abs(zs.zeros - oracle.zeros)))
print("worst normalized residual |f| e^-phi at a zero: %.2e"
      % zs.residual_max)
zs.to_csv(os.path.join(OUT, "zeros_basis.csv"), sample=s)

print("\n=== frame draw ===")
fld = RhoField(WeightSpec.radial_power(2.0), L=L)
window = Rect(-1.6, 1.6, -1.6, 1.6)
seq = make_sampling_sequence(fld, window)
fb = build_basis(2.0, L, abs(window.xmax + 1j * window.ymax) * 1.01)
fm = make_frame_kernel(fb, seq.points, window,
                       interior=Rect(-1.05, 1.05, -1.05, 1.05))
sf = sample_frame_gaf(fm, seed=2024)
zf = locate_zeros(sf, disc)
print("%d frame points -> %d zeros in the unit disc (mean should be ~L r^2"
      " = %.0f)" % (len(seq), len(zf), L))
zf.to_csv(os.path.join(OUT, "zeros_frame.csv"), sample=sf)
seq.to_csv(os.path.join(OUT, "sampling_sequence.csv"))

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 5.2), sharey=True)
    for ax, zz, title in ((axes[0], zs.zeros, "basis draw"),
                          (axes[1], zf.zeros, "frame draw")):
        ax.scatter(zz.real, zz.imag, s=14, c="crimson")
        circle = plt.Circle((0, 0), 1.0, fill=False, ls="--", color="gray")
        ax.add_patch(circle)
        ax.set_aspect("equal")
        ax.set_title("%s: %d zeros" % (title, len(zz)))
    fig.tight_layout()
    fig.savefig(os.path.join(OUT, "zero_portraits.png"), dpi=130)
    print("\nwrote %s" % os.path.join(OUT, "zero_portraits.png"))
except ImportError:
    print("\nmatplotlib not available; CSVs written to %s" % OUT)
