"""Zero location and counting for GAF samples.

Counting is exact winding-number arithmetic: the argument increment of f
around a circle, refined until every step is below pi/2, sums to an
integer multiple of 2 pi. Location runs a quadtree driven by those
counts, with all circles on a level evaluated in one batched call, and
finishes each isolated zero with Newton using the analytic derivative.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryZeroSuspected, SupportEscapesRegion
from .geometry import Disc, Rect, region_contains_disc

_DARG_LIMIT = 0.5 * np.pi


@dataclass
class ZeroSet:
    """Zeros of one sample inside a region, sorted lexicographically."""

    zeros: np.ndarray
    region: object
    method: str
    residual_max: float
    flags: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    disc_count: int = 0          # winding count on the working disc
    located_in_disc: int = 0

    def __len__(self):
        return self.zeros.size

    @property
    def clean(self):
        return not self.flags and not self.unresolved

    def to_csv(self, path, sample=None):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re", "im", "residual"])
            res = np.abs(sample.eval(self.zeros)) if sample is not None else \
                np.zeros(self.zeros.size)
            for z, r in zip(self.zeros, res):
                wr.writerow([repr(z.real), repr(z.imag), repr(float(r))])


# ---------------------------------------------------------------------------
# Winding numbers
# ---------------------------------------------------------------------------


def _winding_once(sample, center, radius, n0, max_pts=1 << 17):
    """One adaptive winding pass. Returns (count, ok, dip_detected).

    The boundary-zero (dip) test uses the flat-normalized modulus
    |f| e^(-phi_L), the only scale on which circle values are comparable.
    """
    n = max(int(n0), 24)
    theta = 2.0 * np.pi * np.arange(n) / n
    phi_fn = sample.basis.phi_L
    pts = center + radius * np.exp(1j * theta)
    vals = sample.eval(pts)
    norm = np.abs(vals) * np.exp(-phi_fn(pts))
    for _ in range(64):
        scale = np.median(norm)
        if scale == 0.0 or np.min(norm) < 1e-12 * scale:
            return 0, False, True
        ratios = np.roll(vals, -1) / vals
        dargs = np.angle(ratios)
        bad = np.abs(dargs) >= _DARG_LIMIT
        if not np.any(bad):
            total = float(np.sum(dargs)) / (2.0 * np.pi)
            if abs(total - round(total)) > 0.05:
                return 0, False, True
            return int(round(total)), True, False
        if theta.size + np.sum(bad) > max_pts:
            return 0, False, True
        gaps = np.diff(np.append(theta, theta[0] + 2 * np.pi))
        new_theta = (theta[bad] + 0.5 * gaps[bad]) % (2.0 * np.pi)
        new_pts = center + radius * np.exp(1j * new_theta)
        new_vals = sample.eval(new_pts)
        new_norm = np.abs(new_vals) * np.exp(-phi_fn(new_pts))
        theta = np.concatenate([theta, new_theta])
        order = np.argsort(theta)
        theta = theta[order]
        vals = np.concatenate([vals, new_vals])[order]
        norm = np.concatenate([norm, new_norm])[order]
    return 0, False, True


def count_zeros_argument(sample, disc: Disc, n0=None, retries=5) -> int:
    """Winding number of the sample around the disc boundary.

    Retries with a multiplicatively jittered radius when the boundary
    values dip toward zero (a zero sitting on the circle); the jitter
    stream is derived from the sample seed so counting stays
    deterministic.
    """
    if n0 is None:
        n0 = _suggest_points(sample, disc.radius)
    radius = disc.radius
    rng = None
    for attempt in range(retries + 1):
        count, ok, dip = _winding_once(sample, disc.center, radius, n0)
        if ok:
            return count
        if rng is None:
            from .pointprocess import rng_stream
            rng = rng_stream(sample.seed ^ 0xB0DA
                             if isinstance(sample.seed, int) else 0xB0DA)
        radius = disc.radius * (1.0 + rng.uniform(0.5, 1.5) * 1e-6
                                * (attempt + 1))
        n0 *= 2
    raise BoundaryZeroSuspected(
        "winding unresolved after %d jittered retries at %r" % (retries, disc))


def _suggest_points(sample, radius):
    L = sample.model.L
    return int(max(64, 8.0 * L * radius**2 + 32))


def winding_counts_batch(basis, coeff_rows, disc: Disc, n0=None, rounds=6):
    """Winding counts for many coefficient vectors on one circle.

    Evaluates all trials on a shared circle in one matrix product;
    trials whose argument steps stay too coarse are retried together
    with doubled point budgets. Returns (counts, resolved_mask);
    unresolved trials (boundary dips, exhausted budget) carry count -1
    and are for the caller's scalar jittered path.
    """
    n_trials = coeff_rows.shape[0]
    if n0 is None:
        n0 = int(max(96, 8.0 * basis.L * disc.radius**2 + 32))
    counts = np.full(n_trials, -1, dtype=int)
    todo = np.arange(n_trials)
    n_pts = n0
    for _ in range(rounds):
        theta = 2.0 * np.pi * np.arange(n_pts) / n_pts
        pts = disc.center + disc.radius * np.exp(1j * theta)
        F = basis.features(pts)
        vals = coeff_rows[todo] @ F.T
        norm = np.abs(vals) * np.exp(-basis.phi_L(pts))[None, :]
        scale = np.median(norm, axis=1)
        dip = (scale == 0.0) | (np.min(norm, axis=1) < 1e-12 * scale)
        dargs = np.angle(np.roll(vals, -1, axis=1) / vals)
        ok = ~dip & np.all(np.abs(dargs) < _DARG_LIMIT, axis=1)
        totals = np.sum(dargs, axis=1) / (2.0 * np.pi)
        ok &= np.abs(totals - np.round(totals)) <= 0.05
        counts[todo[ok]] = np.round(totals[ok]).astype(int)
        todo = todo[~ok & ~dip]
        if todo.size == 0:
            break
        n_pts = min(2 * n_pts, 1 << 13)
    return counts, counts >= 0


# ---------------------------------------------------------------------------
# Zero location
# ---------------------------------------------------------------------------


def locate_zeros(sample, region, tol=None, leaf_factor=64.0,
                 max_levels=48) -> ZeroSet:
    """All zeros of the sample in the region, refined to tol.

    Works on the bounding disc of the region: a count-driven quadtree
    isolates zeros, Newton (with the analytic derivative) polishes them,
    and the final tally is checked against the winding count of the whole
    disc. Zeros outside the region are discarded at the end.
    """
    basis = sample.basis
    if isinstance(region, Rect):
        disc0 = region.bounding_disc(slack=1e-3)
    else:
        disc0 = region.bounding_disc(slack=0.0)
    if tol is None:
        tol = 1e-10 * basis.rho_field.rho(disc0.center)
    total = count_zeros_argument(sample, disc0)
    flags, unresolved = [], []
    roots = np.empty(0, dtype=complex)
    if total > 0:
        roots, unresolved = _quadtree_roots(sample, disc0, total, tol,
                                            leaf_factor, max_levels)
    roots = _dedupe(roots, 10.0 * tol)
    located = int(np.sum(disc0.contains(roots)))
    if located != total:
        flags.append("count_mismatch:%d_located_vs_%d_winding"
                     % (located, total))
    if unresolved:
        flags.append("unresolved_cells:%d" % len(unresolved))
    inside = region.contains(roots, slack=0.0)
    zeros = np.sort_complex(roots[inside])
    if zeros.size:
        f = np.abs(sample.eval(zeros)) * np.exp(-basis.phi_L(zeros))
        residual_max = float(np.max(f))
    else:
        residual_max = 0.0
    return ZeroSet(zeros=zeros, region=region,
                   method="ArgPrincipleSubdivision",
                   residual_max=residual_max, flags=flags,
                   unresolved=unresolved, disc_count=total,
                   located_in_disc=located)


def _quadtree_roots(sample, disc0, disc_count, tol, leaf_factor, max_levels):
    """Quadtree over the square circumscribing the working disc.

    The cell squares tile that cover, so every zero of the disc is owned
    by exactly one cell per level; counting always happens on the cells'
    circumscribed circles, which requires the sample to be certified out
    to about 1.45x the disc radius from its center.
    """
    centers = np.array([disc0.center])
    halves = np.array([disc0.radius * 1.0005])
    counts = _count_cells(sample, centers, halves,
                          expected=np.array([1.5 * disc_count + 4]))
    roots = []
    unresolved = []
    leaf_half = leaf_factor * tol / 2.0
    for _ in range(max_levels):
        if centers.size == 0:
            break
        singles = counts == 1
        if np.any(singles):
            got, failed_c, failed_h = _newton_batch(
                sample, centers[singles], halves[singles], tol)
            roots.extend(got)
            centers = np.concatenate([centers[~singles], failed_c])
            halves = np.concatenate([halves[~singles], failed_h])
        else:
            centers = centers[~singles]
            halves = halves[~singles]
        if centers.size == 0:
            break
        at_leaf = halves <= leaf_half
        if np.any(at_leaf):
            unresolved.extend(centers[at_leaf].tolist())
            centers, halves = centers[~at_leaf], halves[~at_leaf]
        if centers.size == 0:
            break
        # subdivide into quadrants and count each child circle
        off = 0.5 * halves
        child_c = np.concatenate([centers + off * (dx + 1j * dy)
                                  for dx in (-1, 1) for dy in (-1, 1)])
        child_h = np.tile(0.5 * halves, 4)
        child_counts = _count_cells(sample, child_c, child_h,
                                    expected=np.tile(counts, 4))
        keep = child_counts > 0
        centers, halves, counts = (child_c[keep], child_h[keep],
                                   child_counts[keep])
    else:
        unresolved.extend(centers.tolist())
    return np.array(roots, dtype=complex), unresolved


def _count_cells(sample, centers, halves, expected=None, rounds=5):
    """Winding counts of the circumscribed circles, batched per level.

    All circles on the level share one point budget sized from the
    expected occupancy; cells whose argument steps are still too coarse
    are retried together with doubled budgets, and only circles that pass
    near a zero (boundary dip) fall back to the jittered scalar path.
    """
    radii = halves * np.sqrt(2.0) * 1.02
    n = centers.size
    counts = np.full(n, -1, dtype=int)
    todo = np.arange(n)
    if expected is None:
        n_pts = 96
    else:
        n_pts = int(np.clip(8 * np.max(expected) + 48, 64, 2048))
    dip_mask = np.zeros(n, dtype=bool)
    for _ in range(rounds):
        theta = 2.0 * np.pi * np.arange(n_pts) / n_pts
        ring = np.exp(1j * theta)
        pts = centers[todo, None] + radii[todo, None] * ring[None, :]
        vals = sample.eval(pts.ravel()).reshape(todo.size, n_pts)
        norm = np.abs(vals) * np.exp(
            -sample.basis.phi_L(pts.ravel())).reshape(todo.size, n_pts)
        scale = np.median(norm, axis=1)
        dip = (scale == 0.0) | (np.min(norm, axis=1) < 1e-12 * scale)
        dargs = np.angle(np.roll(vals, -1, axis=1) / vals)
        ok = ~dip & np.all(np.abs(dargs) < _DARG_LIMIT, axis=1)
        totals = np.sum(dargs, axis=1) / (2.0 * np.pi)
        ok &= np.abs(totals - np.round(totals)) <= 0.05
        counts[todo[ok]] = np.round(totals[ok]).astype(int)
        dip_mask[todo[dip]] = True
        todo = todo[~ok & ~dip]
        if todo.size == 0:
            break
        n_pts = min(2 * n_pts, 1 << 14)
    for i in np.flatnonzero(counts < 0):
        counts[i] = count_zeros_argument(sample, Disc(centers[i], radii[i]),
                                         n0=2 * n_pts)
    return counts


def _newton_batch(sample, centers, halves, tol, max_iter=60):
    """Newton from cell centers; returns (roots, failed cells).

    A result only counts if it lands inside the cell's own square: the
    squares tile the plane, so every zero is owned by exactly one cell,
    while the counting circles overlap and can attract the iteration
    into a neighbor. Out-of-square convergence sends the cell back for
    subdivision.
    """
    z = centers.astype(complex).copy()
    active = np.ones(z.size, dtype=bool)
    ok = np.zeros(z.size, dtype=bool)
    walk_limit = halves * np.sqrt(2.0) * 1.5
    domain = sample.basis.domain_radius * (1.0 - 1e-12)
    for _ in range(max_iter):
        if not np.any(active):
            break
        f, fp = sample.eval_with_deriv(z[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        step = np.where(np.isfinite(step), step, np.inf)
        znew = z[active] - step
        aidx = np.flatnonzero(active)
        escaped = (np.abs(znew - centers[aidx]) > walk_limit[aidx]) | \
                  (np.abs(znew) > domain) | ~np.isfinite(znew)
        converged = (np.abs(step) < tol) & ~escaped
        z[aidx] = np.where(escaped, z[aidx], znew)
        in_square = np.maximum(np.abs((z[aidx] - centers[aidx]).real),
                               np.abs((z[aidx] - centers[aidx]).imag)) \
            <= halves[aidx] * (1.0 + 1e-9) + tol
        ok[aidx[converged & in_square]] = True
        active[aidx[escaped | converged]] = False
    return z[ok].tolist(), centers[~ok], halves[~ok]


def _dedupe(roots, min_dist):
    if roots.size <= 1:
        return np.sort_complex(roots)
    roots = np.sort_complex(roots)
    keep = [roots[0]]
    for z in roots[1:]:
        if all(abs(z - k) >= min_dist for k in keep[-8:]):
            keep.append(z)
    return np.array(keep, dtype=complex)


# ---------------------------------------------------------------------------
# Companion-matrix oracle (independent root path for truncated bases)
# ---------------------------------------------------------------------------


def locate_zeros_polyroots(sample, region, polish_tol=None) -> ZeroSet:
    """Roots via the companion matrix of the truncated polynomial.

    Independent of the winding/subdivision machinery; used to cross-check
    it. Only meaningful for radial bases, where the sample is literally a
    polynomial in z.
    """
    basis = sample.basis
    if not basis.is_radial:
        raise ValueError("polynomial oracle needs a radial basis")
    b = sample.basis_coeffs * np.exp(-basis.log_norms)
    b = np.trim_zeros(b, "b")
    all_roots = np.roots(b[::-1]) if b.size > 1 else np.empty(0, complex)
    if isinstance(region, Rect):
        disc0 = region.bounding_disc(slack=1e-3)
    else:
        disc0 = region.bounding_disc()
    if polish_tol is None:
        polish_tol = 1e-12 * basis.rho_field.rho(disc0.center)
    near = all_roots[np.abs(all_roots - disc0.center) < disc0.radius * 1.05]
    for _ in range(40):
        f, fp = sample.eval_with_deriv(near)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(fp) > 0, f / fp, 0.0)
        near = near - step
        if near.size == 0 or np.max(np.abs(step)) < polish_tol:
            break
    inside = region.contains(near)
    zeros = np.sort_complex(near[inside])
    res = np.abs(sample.eval(zeros)) * np.exp(-basis.phi_L(zeros)) \
        if zeros.size else np.empty(0)
    return ZeroSet(zeros=zeros, region=region, method="PolyRoots",
                   residual_max=float(np.max(res)) if res.size else 0.0)


# ---------------------------------------------------------------------------
# Linear statistics
# ---------------------------------------------------------------------------


def linear_statistic(zs: ZeroSet, psi, L) -> float:
    """(1/L) sum of psi over the zeros."""
    if not region_contains_disc(zs.region, psi.support_disc, slack=1e-9):
        raise SupportEscapesRegion(
            "test function support %r is not inside the zero-set region"
            % (psi.support_disc,))
    if zs.zeros.size == 0:
        return 0.0
    return float(np.sum(psi(zs.zeros))) / L
