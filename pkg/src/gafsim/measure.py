"""Doubling weights and their planar measures.

A weight is a subharmonic function phi whose Laplacian density defines a
measure mu = (Delta phi) dm on the plane. The central object is the
unit-mass radius rho_L(z): the radius at which the disc around z carries
mass exactly 1 under the scaled measure L*mu. Everything downstream
(kernels, sampling sequences, zero statistics) is expressed in terms of
rho_L and disc masses, so this module is the numerical foundation.

Supported weights:

  * radial powers   phi(z) = |z|^alpha / 2, density (alpha^2/2) |z|^(alpha-2)
  * re-square       phi(z) = (Re z)^2, density 2
  * tabulated       a strictly positive density sampled on a grid with
                    bilinear interpolation (phi itself is not available)
"""

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (DivisionByZeroMass, NoBracket, QuadratureFailure,
                     UnsupportedWeightOperation)
from .geometry import Rect
from .quadrature import (adaptive_gl, gl_endpoint_mapped_adaptive,
                         _panel_values)

RADIAL_POWER = "radial_power"
RE_SQUARE = "re_square"
TABULATED = "tabulated"


@dataclass(frozen=True)
class WeightSpec:
    """A subharmonic weight and the density of its Laplacian measure."""

    kind: str
    alpha: float = None
    name: str = ""
    # tabulated-density payload (None for analytic kinds)
    tab_x: np.ndarray = field(default=None, repr=False, compare=False)
    tab_y: np.ndarray = field(default=None, repr=False, compare=False)
    tab_values: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == RADIAL_POWER:
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("radial power weight needs alpha > 0")
        elif self.kind == RE_SQUARE:
            pass
        elif self.kind == TABULATED:
            if self.tab_values is None or np.min(self.tab_values) <= 0:
                # the theory needs doubling, which forbids mass gaps; we
                # restrict to everywhere-positive densities
                raise ValueError("tabulated density must be strictly positive "
                                 "on its grid")
        else:
            raise ValueError("unknown weight kind %r" % (self.kind,))
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self):
        if self.kind == RADIAL_POWER:
            return "radial_power(alpha=%g)" % self.alpha
        if self.kind == RE_SQUARE:
            return "re_square"
        return "tabulated"

    # -- constructors ---------------------------------------------------

    @staticmethod
    def radial_power(alpha, name=""):
        return WeightSpec(RADIAL_POWER, alpha=float(alpha), name=name)

    @staticmethod
    def re_square(name=""):
        return WeightSpec(RE_SQUARE, name=name)

    @staticmethod
    def tabulated(xs, ys, values, name=""):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (ys.size, xs.size):
            raise ValueError("tabulated values must have shape (ny, nx)")
        return WeightSpec(TABULATED, name=name, tab_x=xs, tab_y=ys,
                          tab_values=values)

    # -- basic structure -------------------------------------------------

    @property
    def is_radial(self):
        return self.kind == RADIAL_POWER

    @property
    def constant_density(self):
        """Density value if the density is constant, else None."""
        if self.kind == RE_SQUARE:
            return 2.0
        if self.kind == RADIAL_POWER and self.alpha == 2.0:
            return 2.0
        return None

    def weight(self, z):
        """phi(z). Not available for tabulated densities."""
        z = np.asarray(z, dtype=complex)
        if self.kind == RADIAL_POWER:
            return 0.5 * np.abs(z) ** self.alpha
        if self.kind == RE_SQUARE:
            return z.real.astype(float) ** 2
        raise UnsupportedWeightOperation(
            "tabulated weights carry only a density, not phi itself")

    def density(self, z):
        """Laplacian density of phi, vectorized over complex z."""
        z = np.asarray(z, dtype=complex)
        if self.kind == RADIAL_POWER:
            a = self.alpha
            if a == 2.0:
                return np.full(z.shape, 2.0)
            r = np.abs(z)
            with np.errstate(divide="ignore"):
                out = 0.5 * a * a * r ** (a - 2.0)
            return out
        if self.kind == RE_SQUARE:
            return np.full(z.shape, 2.0)
        return self._bilinear(z)

    def density_radial(self, s):
        """Density as a function of |z| (radial weights only)."""
        a = self.alpha
        if a == 2.0:
            return np.full(np.shape(s), 2.0)
        with np.errstate(divide="ignore"):
            return 0.5 * a * a * np.asarray(s, dtype=float) ** (a - 2.0)

    def _bilinear(self, z):
        xs, ys, v = self.tab_x, self.tab_y, self.tab_values
        x = np.clip(np.asarray(z).real, xs[0], xs[-1])
        y = np.clip(np.asarray(z).imag, ys[0], ys[-1])
        i = np.clip(np.searchsorted(xs, x) - 1, 0, xs.size - 2)
        j = np.clip(np.searchsorted(ys, y) - 1, 0, ys.size - 2)
        tx = (x - xs[i]) / (xs[i + 1] - xs[i])
        ty = (y - ys[j]) / (ys[j + 1] - ys[j])
        return ((1 - ty) * ((1 - tx) * v[j, i] + tx * v[j, i + 1])
                + ty * ((1 - tx) * v[j + 1, i] + tx * v[j + 1, i + 1]))

    # -- config round trip ------------------------------------------------

    def to_config(self):
        if self.kind == RADIAL_POWER:
            return {"kind": RADIAL_POWER, "alpha": self.alpha}
        if self.kind == RE_SQUARE:
            return {"kind": RE_SQUARE}
        return {"kind": TABULATED, "path": None}

    @staticmethod
    def from_config(d):
        kind = d.get("kind")
        if kind == RADIAL_POWER:
            return WeightSpec.radial_power(d["alpha"])
        if kind == RE_SQUARE:
            return WeightSpec.re_square()
        if kind == TABULATED:
            with np.load(d["path"]) as data:
                return WeightSpec.tabulated(data["xs"], data["ys"],
                                            data["density"])
        raise ValueError("unknown weight kind %r" % (kind,))


def weight_eval(w: WeightSpec, z) -> float:
    """phi(z) for a single point."""
    out = w.weight(z)
    return float(np.asarray(out).reshape(-1)[0]) if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Disc masses
# ---------------------------------------------------------------------------

def _radial_lens_mass(w, d, r, rel_tol=1e-11):
    """mu(D(z0, r)) for a radial density, |z0| = d.

    The angular integral of a radial density over a circle of radius s
    is the arc length of {theta : |s e^{i theta} - d| < r}, which has a
    closed form, so the disc mass reduces to a 1-D radial integral. The
    integral runs over x = s - d and the arc angle 2 acos(c) is computed
    as 4 asin(sqrt((r-x)(r+x)/(4sd))), both of which stay well
    conditioned when r << d.
    """
    a = w.alpha
    if d <= 1e-14 * max(r, 1.0):
        return np.pi * a * r**a
    if r <= 1e-7 * d:
        # flat-disc regime: relative curvature correction is O((r/d)^2)
        return np.pi * r * r * float(w.density_radial(d))
    x_lo = abs(r - d) - d
    x_hi = r
    full = np.pi * a * max(r - d, 0.0) ** a

    def arc_integrand(x):
        x = np.asarray(x, dtype=float)
        s = d + x
        q = (r - x) * (r + x) / (4.0 * s * d)
        arc = 4.0 * np.arcsin(np.sqrt(np.clip(q, 0.0, 1.0)))
        return 0.5 * a * a * s ** (a - 1.0) * arc

    lens = 0.0
    lo = x_lo
    if a < 2.0 and d + x_lo < 1e-6 * (d + x_hi):
        # origin sits essentially on the boundary circle; pull the
        # integrable s^(a-1) singularity out with u = s^a
        cut = 0.05 * (d + x_hi)

        def sub(u):
            s = u ** (1.0 / a)
            q = (r - (s - d)) * (r + (s - d)) / (4.0 * s * d)
            arc = 4.0 * np.arcsin(np.sqrt(np.clip(q, 0.0, 1.0)))
            return 0.5 * a * arc

        lens += adaptive_gl(sub, 0.0, cut**a, rel_tol=rel_tol)
        lo = cut - d
    lens += gl_endpoint_mapped_adaptive(arc_integrand, lo, x_hi,
                                        rel_tol=rel_tol)
    return full + lens


def _polar_mass_2d(w, z0, r, rel_tol=1e-9, n_theta0=64, budget=2_000_000):
    """Generic disc mass by polar quadrature around the center.

    Gauss-Legendre panels in radius crossed with a uniform trapezoid rule
    in angle; the angular node count doubles until the value converges.
    """
    prev = None
    n_theta = n_theta0
    evals = 0
    while True:
        theta = np.exp(2j * np.pi * np.arange(n_theta) / n_theta)

        def ring(s):
            pts = z0 + np.multiply.outer(np.asarray(s, dtype=float), theta)
            return np.asarray(s) * np.mean(w.density(pts), axis=-1) * 2 * np.pi

        val = 0.0
        panels = np.linspace(0.0, r, 9)
        for plo, phi_ in zip(panels[:-1], panels[1:]):
            coarse = _panel_values(ring, plo, phi_, 16)
            fine = _panel_values(ring, plo, phi_, 32)
            if abs(fine - coarse) > 0.05 * rel_tol * max(abs(fine), 1e-300):
                fine = _panel_values(ring, plo, phi_, 64)
            val += fine
        evals += n_theta * 8 * 64
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        if evals > budget:
            raise QuadratureFailure(
                "polar disc mass did not reach tolerance %g within budget"
                % rel_tol)
        prev = val
        n_theta *= 2


def mu_disc(w: WeightSpec, z0, r, L=1.0, rel_tol=1e-9, method="auto"):
    """Scaled disc mass L * mu(D(z0, r)).

    Closed forms cover radial powers centered at the origin and
    constant-density weights; everything else goes through quadrature
    with relative error <= rel_tol.
    """
    if r < 0:
        raise ValueError("negative radius")
    if r == 0.0:
        return 0.0
    z0 = complex(z0)
    if method == "auto":
        c = w.constant_density
        if c is not None:
            return L * c * np.pi * r * r
        if w.is_radial and abs(z0) <= 1e-14 * max(r, 1.0):
            return L * np.pi * w.alpha * r ** w.alpha
        if w.is_radial:
            return L * _radial_lens_mass(w, abs(z0), r,
                                         rel_tol=min(rel_tol, 1e-11))
    return L * _polar_mass_2d(w, z0, r, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# The unit-mass radius field rho_L
# ---------------------------------------------------------------------------

CACHE_QUANTUM = 1e-6  # rho is 1-Lipschitz, so keying at 1e-6 costs <= 1e-6


class RhoField:
    """Memoized evaluator of rho_L(z), the radius with L*mu(D(z, rho)) = 1.

    Immutable after construction apart from the memo table, which may be
    read and written from any number of threads (duplicate computation is
    harmless, torn values are prevented by a lock).
    """

    def __init__(self, weight: WeightSpec, L=1.0, tol_rel=1e-9):
        if L < 1.0:
            raise ValueError("scaling parameter L must be >= 1")
        self.weight = weight
        self.L = float(L)
        self.tol_rel = float(tol_rel)
        self.cache = {}
        self._lock = threading.Lock()

    # cache keys exploit symmetry: rho depends only on |z| for radial
    # weights and is constant for constant densities
    def _key(self, z):
        if self.weight.constant_density is not None:
            return "const"
        if self.weight.is_radial:
            return round(abs(z) / CACHE_QUANTUM)
        return (round(z.real / CACHE_QUANTUM), round(z.imag / CACHE_QUANTUM))

    def _mass(self, z, r):
        return mu_disc(self.weight, z, r, L=self.L,
                       rel_tol=min(1e-10, self.tol_rel / 10.0))

    def _root(self, z):
        # bracket by doubling, bisect, then secant-polish the mass residual
        r_hi = 1e-12
        m_hi = self._mass(z, r_hi)
        doublings = 0
        while m_hi < 1.0:
            r_hi *= 2.0
            doublings += 1
            if doublings > 200:
                raise NoBracket("disc mass around %r never reaches 1" % (z,))
            m_hi = self._mass(z, r_hi)
        r_lo = r_hi / 2.0 if doublings else 0.0
        for _ in range(30):
            mid = 0.5 * (r_lo + r_hi)
            if self._mass(z, mid) < 1.0:
                r_lo = mid
            else:
                r_hi = mid
            if (r_hi - r_lo) < 1e-3 * r_hi:
                break
        ra, rb = r_lo, r_hi
        fa, fb = self._mass(z, ra) - 1.0, self._mass(z, rb) - 1.0
        for _ in range(80):
            if abs(fb) <= 0.01 * self.tol_rel:
                return rb
            if fb == fa:
                break
            r_new = rb - fb * (rb - ra) / (fb - fa)
            if not (r_lo < r_new < r_hi):
                r_new = 0.5 * (r_lo + r_hi)
            f_new = self._mass(z, r_new) - 1.0
            if f_new < 0:
                r_lo = r_new
            else:
                r_hi = r_new
            ra, fa, rb, fb = rb, fb, r_new, f_new
        if abs(fb) > 10.0 * self.tol_rel:
            raise QuadratureFailure(
                "unit-mass radius polish stalled at residual %g" % fb)
        return rb

    def rho(self, z):
        z = complex(z)
        key = self._key(z)
        with self._lock:
            hit = self.cache.get(key)
        if hit is not None:
            return hit
        val = self._root(z)
        with self._lock:
            self.cache[key] = val
        return val

    def rho_many(self, zs):
        zs = np.asarray(zs, dtype=complex)
        flat = zs.ravel()
        out = np.empty(flat.shape, dtype=float)
        for i, z in enumerate(flat):
            out[i] = self.rho(z)
        return out.reshape(zs.shape)

    def dmu_approx(self, z, zeta):
        """Straight-segment length of [z, zeta] in the rho_L^-1 metric.

        This upper-bounds the geodesic distance; for the weights shipped
        here segments are near-optimal and every downstream use only
        needs the distance up to constants.
        """
        z, zeta = complex(z), complex(zeta)
        dz = zeta - z
        length = abs(dz)
        if length == 0.0:
            return 0.0
        if self.weight.constant_density is not None:
            return length / self.rho(z)

        def integrand(t):
            return length / self.rho_many(z + np.asarray(t) * dz)

        return adaptive_gl(integrand, 0.0, 1.0, rel_tol=1e-9, order=16,
                           max_panels=400)


def rho(field: RhoField, z) -> float:
    return field.rho(z)


def dmu_approx(field: RhoField, z, zeta) -> float:
    return field.dmu_approx(z, zeta)


# ---------------------------------------------------------------------------
# Regularity diagnostics
# ---------------------------------------------------------------------------

def doubling_ratio_scan(w: WeightSpec, region: Rect, radii, grid_n=7,
                        rel_tol=1e-9):
    """Empirical lower bound for the doubling constant.

    Scans mu(D(z, 2r)) / mu(D(z, r)) over a grid of centers and the given
    radii and returns the maximum ratio observed.
    """
    worst = 1.0
    for z in region.grid(grid_n):
        for r in radii:
            if r <= 0:
                raise ValueError("radii must be positive")
            small = mu_disc(w, z, r, rel_tol=rel_tol)
            if small == 0.0:
                raise DivisionByZeroMass(z, r)
            big = mu_disc(w, z, 2.0 * r, rel_tol=rel_tol)
            worst = max(worst, big / small)
    return worst


def local_flatness_scan(w: WeightSpec, region: Rect, grid_n=5,
                        sub_factors=(0.5, 0.25), rel_tol=1e-9):
    """Area-scaling diagnostic on sub-discs of unit-mass discs.

    For each unit-mass disc D = D(z, rho(z)) and sub-disc D' of radius
    r' the quantity mu(D') * (rho / r')^2 equals 1 exactly when the
    density is constant. Returns the extremes over sampled (D, D')
    pairs; a flat weight keeps both near 1.
    """
    fld = RhoField(w, L=1.0)
    qmin, qmax = np.inf, -np.inf
    for z in region.grid(grid_n):
        radius = fld.rho(z)
        for f in sub_factors:
            r_sub = f * radius
            offsets = [0.0]
            step = radius - r_sub
            offsets += [step, -step, 1j * step, -1j * step]
            for off in offsets:
                q = mu_disc(w, z + off, r_sub, rel_tol=rel_tol) * (radius / r_sub) ** 2
                qmin = min(qmin, q)
                qmax = max(qmax, q)
    return {"min_ratio": qmin, "max_ratio": qmax}


def flatness_band(w: WeightSpec, region: Rect, **kw):
    scan = local_flatness_scan(w, region, **kw)
    return scan["max_ratio"] / scan["min_ratio"]


# ---------------------------------------------------------------------------
# Radial rho profile (fast path for basis construction)
# ---------------------------------------------------------------------------

class RadialRhoProfile:
    """Certified interpolant of rho_1(s) for a radial weight.

    Built from honest root-finds on a graded grid and certified by
    spot-checking the defining identity |mu(D(s, rho_1(s))) - 1| at
    off-grid probes. Scaling transfers it to any L:
    rho_L(s) = L^(-1/alpha) * rho_1(L^(1/alpha) * s).
    """

    def __init__(self, weight, t_max, certify_tol=1e-7):
        self.weight = weight
        self.t_max = float(t_max)
        self._build()
        self._certify(certify_tol)

    def _build(self, densify=1):
        w = self.weight
        fld = RhoField(w, L=1.0, tol_rel=1e-10)
        inner_hi = min(4.0, self.t_max)
        n_inner = 513 * densify
        s_inner = np.linspace(0.0, inner_hi, n_inner)
        rho_inner = fld.rho_many(s_inner)
        self._inner_hi = inner_hi
        self._inner = CubicSpline(s_inner, rho_inner,
                                  bc_type=((1, 0.0), "not-a-knot"))
        if self.t_max > inner_hi:
            n_outer = max(16, int(48 * densify *
                                  np.log10(self.t_max / inner_hi)) + 1)
            s_outer = np.geomspace(inner_hi, self.t_max * 1.05, n_outer)
            rho_outer = fld.rho_many(s_outer)
            self._outer = CubicSpline(np.log(s_outer), np.log(rho_outer))
        else:
            self._outer = None

    def _certify(self, tol):
        rng = np.random.default_rng(12345)
        probes = rng.uniform(0.0, self.t_max, size=48)
        for attempt in range(2):
            worst = 0.0
            for s in probes:
                resid = abs(mu_disc(self.weight, s, self(s)) - 1.0)
                worst = max(worst, resid)
            if worst <= tol:
                self.residual = worst
                return
            self._build(densify=2 * (attempt + 1))
        raise QuadratureFailure(
            "radial rho profile certification failed (residual %g)" % worst)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape, dtype=float)
        inner = s <= self._inner_hi
        out[inner] = self._inner(s[inner])
        if np.any(~inner):
            if self._outer is None:
                raise ValueError("profile evaluated beyond its domain")
            sx = np.clip(s[~inner], None, self.t_max * 1.05)
            out[~inner] = np.exp(self._outer(np.log(sx)))
        return out


_PROFILE_REGISTRY = {}
_PROFILE_LOCK = threading.Lock()


def get_radial_profile(weight: WeightSpec, t_max) -> RadialRhoProfile:
    """Shared rho_1 profile for a radial weight, grown on demand."""
    key = weight.alpha
    with _PROFILE_LOCK:
        prof = _PROFILE_REGISTRY.get(key)
    if prof is not None and prof.t_max >= t_max:
        return prof
    prof = RadialRhoProfile(weight, t_max * 1.25)
    with _PROFILE_LOCK:
        _PROFILE_REGISTRY[key] = prof
    return prof
