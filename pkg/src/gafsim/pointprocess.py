"""Point sources of randomness: sampling sequences, GAF draws, Poisson.

Random coefficients come from counter-based Philox streams keyed by
(seed word, trial word), so any trial of any experiment can be
regenerated in isolation and trials can run on any number of threads
without shared state.

A Gaussian analytic function is materialized as a coefficient vector
against the (truncated) basis. Frame draws a_lambda are reduced to the
same representation through the precomputed frame-to-basis matrix, so
evaluation, differentiation and zero finding share one code path.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import CoverageFailure, RegionNotPadded, UnboundedDensity
from .fock import KernelModel
from .geometry import Rect
from .measure import RhoField, mu_disc

_MASK64 = (1 << 64) - 1


def rng_stream(seed, trial=0):
    """Independent Generator for (seed, trial), Philox counter-based."""
    key = np.array([seed & _MASK64, ((seed >> 64) ^ trial) & _MASK64],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def combine_seed(master, trial):
    """Fold a trial index into a master seed; splits back inside rng_stream."""
    return (int(master) & _MASK64) | (int(trial) & _MASK64) << 64


def standard_complex_gaussians(rng, n):
    """iid complex Gaussians with E|a|^2 = 1 (Re, Im ~ N(0, 1/2))."""
    z = rng.standard_normal(2 * n)
    return (z[:n] + 1j * z[n:]) * np.sqrt(0.5)


# ---------------------------------------------------------------------------
# Sampling sequences
# ---------------------------------------------------------------------------


@dataclass
class SamplingSequence:
    """A separated, covering point set adapted to the unit-mass radius.

    Separation: |a - b| >= separation_delta * max(rho_L(a), rho_L(b)) for
    all pairs. Covering: every point of the unpadded target region has a
    sequence point within covering_R times its local rho_L.
    """

    points: np.ndarray
    separation_delta: float
    covering_R: float
    L: float
    region: Rect                     # padded generation window
    rho_values: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.points.size

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re", "im", "rho_L"])
            for p, r in zip(self.points, self.rho_values):
                wr.writerow([repr(p.real), repr(p.imag), repr(float(r))])


def make_sampling_sequence(field_: RhoField, region: Rect, delta=0.4,
                           R=1.0, max_candidates=6_000_000,
                           densify_rounds=4) -> SamplingSequence:
    """Greedy separated net on a fine grid, then covering verification.

    Scans a row-major grid of pitch delta*min(rho_L)/4 over the padded
    window, accepting any candidate that keeps the scaled separation,
    then verifies covering on probes of the unpadded region and inserts
    any uncovered probe (always legal, since an uncovered point is
    automatically separated when delta < R).
    """
    if not (0 < delta < R):
        raise ValueError("need 0 < delta < R")
    w = field_.weight
    probe = region.grid(12)
    rho_probe = field_.rho_many(probe)
    rho_min, rho_max = float(np.min(rho_probe)), float(np.max(rho_probe))
    pitch = delta * rho_min / 4.0
    nx = int(np.ceil(region.width / pitch))
    ny = int(np.ceil(region.height / pitch))
    if nx * ny > max_candidates:
        raise ValueError("candidate grid would need %d points; shrink the "
                         "region or raise max_candidates" % (nx * ny))

    cell = delta * rho_max
    buckets = {}
    accepted = []
    accepted_rho = []

    def try_add(z, rho_z):
        ci, cj = int(np.floor(z.real / cell)), int(np.floor(z.imag / cell))
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for idx in buckets.get((ci + di, cj + dj), ()):
                    lam = accepted[idx]
                    if abs(z - lam) < delta * max(rho_z, accepted_rho[idx]):
                        return False
        buckets.setdefault((ci, cj), []).append(len(accepted))
        accepted.append(z)
        accepted_rho.append(rho_z)
        return True

    constant_rho = field_.weight.constant_density is not None
    rho_flat = field_.rho(region.center) if constant_rho else None
    ys = region.ymin + (np.arange(ny) + 0.5) * region.height / ny
    xs = region.xmin + (np.arange(nx) + 0.5) * region.width / nx
    for y in ys:
        row = xs + 1j * y
        rhos = np.full(nx, rho_flat) if constant_rho else field_.rho_many(row)
        for z, rho_z in zip(row, rhos):
            try_add(z, rho_z)

    # covering check on the unpadded interior, densify where needed
    target = Rect(region.xmin + 0.0, region.xmax, region.ymin, region.ymax)
    for round_ in range(densify_rounds + 1):
        pts = np.array(accepted)
        tree = cKDTree(np.column_stack([pts.real, pts.imag]))
        n_probe = max(24, int(np.ceil(target.width / (R * rho_min / 3.0))))
        probes = target.grid(min(n_probe, 1400))
        rho_p = (np.full(probes.size, rho_flat) if constant_rho
                 else field_.rho_many(probes))
        d, _ = tree.query(np.column_stack([probes.real, probes.imag]))
        bad = d > R * rho_p
        if not np.any(bad):
            break
        if round_ == densify_rounds:
            raise CoverageFailure("covering not achieved after %d rounds"
                                  % densify_rounds)
        for z, rho_z in zip(probes[bad], rho_p[bad]):
            try_add(z, rho_z)

    pts = np.array(accepted)
    seq = SamplingSequence(points=pts, separation_delta=delta, covering_R=R,
                           L=field_.L, region=region,
                           rho_values=np.array(accepted_rho))
    _assert_separation(seq)
    return seq


def _assert_separation(seq):
    pts = seq.points
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    pairs = tree.query_pairs(seq.separation_delta * float(np.max(seq.rho_values)))
    for i, j in pairs:
        need = seq.separation_delta * max(seq.rho_values[i], seq.rho_values[j])
        if abs(pts[i] - pts[j]) < need * (1.0 - 1e-12):
            raise AssertionError("separation violated by construction bug")


def sampling_density_check(seq: SamplingSequence, field_: RhoField,
                           radii=(5.0, 10.0, 20.0), threshold=1.0 / (2 * np.pi)):
    """Empirical lower density of the sequence against the threshold.

    Counts sequence points in probe discs D(z, r * rho_L(z)) against the
    scaled disc mass; the minimum ratio over probes should clear the
    spanning threshold 1/(2 pi) with margin.
    """
    pts = seq.points
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    rho_max = float(np.max(seq.rho_values))
    half = 0.5 * min(seq.region.width, seq.region.height)
    usable = [r for r in radii if r * rho_max < 0.85 * half]
    if not usable:
        raise ValueError("no probe radius fits inside the window; enlarge "
                         "the region or shrink the radii")
    worst = np.inf
    for r in usable:
        margin = r * rho_max * 1.05
        inner = Rect(seq.region.xmin + margin, seq.region.xmax - margin,
                     seq.region.ymin + margin, seq.region.ymax - margin)
        for z in inner.grid(4):
            rho_z = field_.rho(z)
            count = len(tree.query_ball_point([z.real, z.imag], r * rho_z))
            mass = mu_disc(field_.weight, z, r * rho_z, L=field_.L)
            worst = min(worst, count / mass)
    return {"min_ratio": worst, "threshold": threshold, "radii": usable,
            "passes": worst > threshold}


# ---------------------------------------------------------------------------
# GAF samples
# ---------------------------------------------------------------------------


def _horner(coeffs, w):
    acc = np.full(w.shape, coeffs[-1], dtype=complex)
    for k in range(coeffs.size - 2, -1, -1):
        acc *= w
        acc += coeffs[k]
    return acc


@dataclass
class GafSample:
    """One draw of a Gaussian analytic function, reproducible from seed.

    coeffs holds the raw iid complex Gaussians (per basis function or per
    sequence point); basis_coeffs is the equivalent coefficient vector in
    the truncated basis used by the evaluator. Radial bases evaluate by
    Horner recursion in z/domain_radius, whose rescaled coefficients stay
    within float range whenever the kernel diagonal itself does.
    """

    form: str
    model: KernelModel
    seed: int
    coeffs: np.ndarray = field(repr=False)
    basis_coeffs: np.ndarray = field(repr=False)
    _poly: tuple = field(default=None, repr=False, compare=False)

    @property
    def basis(self):
        return self.model.basis

    def _scaled_poly(self):
        if self._poly is None:
            basis = self.basis
            if getattr(basis, "log_norms", None) is None:
                self._poly = ("features",)
            else:
                scale = basis.domain_radius
                n = np.arange(basis.n_max + 1)
                expo = n * np.log(scale) - basis.log_norms
                if np.max(expo) > 690.0:
                    self._poly = ("features",)
                else:
                    B = self.basis_coeffs * np.exp(expo)
                    D = B[1:] * n[1:] / scale if basis.n_max >= 1 else \
                        np.zeros(1, dtype=complex)
                    self._poly = ("horner", scale, B, D)
        return self._poly

    def eval(self, z):
        self.basis.check_domain(z)
        z = np.asarray(z, dtype=complex)
        poly = self._scaled_poly()
        if poly[0] == "horner":
            out = _horner(poly[2], z.ravel() / poly[1]).reshape(z.shape)
        else:
            f, _ = self.basis.eval_f_fp(self.basis_coeffs, z.ravel())
            out = f.reshape(z.shape)
        return complex(out) if out.ndim == 0 else out

    def eval_with_deriv(self, z):
        self.basis.check_domain(z)
        z = np.asarray(z, dtype=complex)
        poly = self._scaled_poly()
        if poly[0] == "horner":
            w = z.ravel() / poly[1]
            f = _horner(poly[2], w).reshape(z.shape)
            fp = _horner(poly[3], w).reshape(z.shape)
        else:
            f, fp = self.basis.eval_f_fp(self.basis_coeffs, z.ravel())
            f, fp = f.reshape(z.shape), fp.reshape(z.shape)
        return f, fp


def sample_basis_gaf(model: KernelModel, seed) -> GafSample:
    """GAF with iid standard complex Gaussian basis coefficients."""
    if model.is_frame:
        raise ValueError("model is frame form; use sample_frame_gaf")
    rng = rng_stream(seed)
    a = standard_complex_gaussians(rng, model.basis.n_max + 1)
    return GafSample(form="basis", model=model, seed=seed, coeffs=a,
                     basis_coeffs=a)


def sample_frame_gaf(model: KernelModel, seed,
                     experiment_region=None) -> GafSample:
    """GAF built from one Gaussian per sampling-sequence point.

    The draw sum_lambda a_lambda k_lambda collapses onto the basis through
    the precomputed normalized-evaluation matrix, so the returned sample
    evaluates exactly like a basis draw.
    """
    if not model.is_frame:
        raise ValueError("model is basis form; use sample_basis_gaf")
    if experiment_region is not None and model.interior is not None:
        if not model.interior.contains_rect(experiment_region, slack=1e-12):
            raise RegionNotPadded(
                "experiment region exceeds the padded frame window")
    rng = rng_stream(seed)
    a = standard_complex_gaussians(rng, model.points.size)
    c = model.w_matrix.T @ a
    return GafSample(form="frame", model=model, seed=seed, coeffs=a,
                     basis_coeffs=c)


# ---------------------------------------------------------------------------
# Poisson baseline
# ---------------------------------------------------------------------------

DEFAULT_POISSON_SCALE = 1.0 / (2.0 * np.pi)


def sample_poisson_pp(field_: RhoField, region: Rect,
                      intensity_scale=DEFAULT_POISSON_SCALE, seed=0,
                      rng=None):
    """Inhomogeneous Poisson points with intensity scale*L*density.

    Thinning sampler: uniform candidates at the density supremum are
    accepted with probability density/sup. The default intensity scale
    1/(2 pi) matches the first moment of the zero processes; scale 1
    reproduces the raw measure.
    """
    if intensity_scale <= 0:
        raise ValueError("intensity_scale must be positive")
    w = field_.weight
    L = field_.L
    if rng is None:
        rng = rng_stream(seed)
    exclusion = None
    if w.is_radial and w.alpha < 2.0 and region.contains(0.0):
        # integrable singularity at the origin: excise a disc whose
        # expected count is far below one event per 1e9 trials
        eps = (1e-12 / (intensity_scale * L * np.pi * w.alpha)) ** (1.0 / w.alpha)
        exclusion = eps
        corners = np.array([region.xmin + 1j * region.ymin,
                            region.xmax + 1j * region.ymin,
                            region.xmin + 1j * region.ymax,
                            region.xmax + 1j * region.ymax, eps + 0j])
        sup = float(np.max(w.density(corners)))
    else:
        probe = np.concatenate([region.grid(24),
                                np.array([region.xmin + 1j * region.ymin,
                                          region.xmax + 1j * region.ymax])])
        sup = float(np.max(w.density(probe)))
        if w.is_radial and w.alpha > 2.0:
            corner = max(abs(region.xmin + 1j * region.ymin),
                         abs(region.xmax + 1j * region.ymax),
                         abs(region.xmin + 1j * region.ymax),
                         abs(region.xmax + 1j * region.ymin))
            sup = float(w.density_radial(corner))
    if not np.isfinite(sup):
        raise UnboundedDensity("density supremum is not finite on the region")
    lam_max = intensity_scale * L * sup
    n_cand = rng.poisson(lam_max * region.area)
    x = rng.uniform(region.xmin, region.xmax, n_cand)
    y = rng.uniform(region.ymin, region.ymax, n_cand)
    z = x + 1j * y
    accept = rng.uniform(0.0, 1.0, n_cand) * sup <= w.density(z)
    pts = z[accept]
    if exclusion is not None:
        pts = pts[np.abs(pts) > exclusion]
    return pts
