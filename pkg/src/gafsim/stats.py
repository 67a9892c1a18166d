"""Test functions, theoretical predictions, and fitting utilities.

The theory side of the statistics: the expected value of smooth linear
statistics of the zero set (via the log-Laplacian of the kernel
diagonal), the exact variance double integral with its dilogarithm
kernel, the closed-form surrogate it is compared against, and the
normality-condition integrals of the normalized kernel. Monte Carlo
counterparts live in experiments.py.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import spence
from scipy.optimize import minimize_scalar

from .fock import (KernelModel, kernel_log_diag, kernel_log_laplacian,
                   unit_features)
from .geometry import Disc
from .measure import RhoField, WeightSpec
from .quadrature import integrate_2d, tensor_grid

TRUNCATION_LEVEL = 1e-14  # Gaussian bumps treated as supported where psi > this


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBump:
    """psi(z) = height * exp(-|z - center|^2 / (2 width^2)), truncated to
    zero where it falls below TRUNCATION_LEVEL * height (far below every
    tolerance in play, so it acts as compactly supported)."""

    center: complex
    width: float
    height: float = 1.0

    @property
    def support_radius(self):
        return self.width * np.sqrt(2.0 * np.log(1.0 / TRUNCATION_LEVEL))

    @property
    def support_disc(self):
        return Disc(self.center, self.support_radius)

    def __call__(self, z):
        r2 = np.abs(np.asarray(z) - self.center) ** 2
        out = self.height * np.exp(-0.5 * r2 / self.width**2)
        return np.where(out >= TRUNCATION_LEVEL * self.height, out, 0.0)

    def laplacian(self, z):
        r2 = np.abs(np.asarray(z) - self.center) ** 2
        core = self.height * np.exp(-0.5 * r2 / self.width**2)
        val = core * (r2 / self.width**4 - 2.0 / self.width**2)
        return np.where(core >= TRUNCATION_LEVEL * self.height, val, 0.0)

    def integral_dm(self):
        return 2.0 * np.pi * self.width**2 * self.height

    def integral_sq_dm(self):
        return np.pi * self.width**2 * self.height**2

    def integral_abs_laplacian(self):
        # the Laplacian changes sign on r = sqrt(2) w; both lobes have
        # flux 4 pi h / e by the divergence theorem
        return 8.0 * np.pi * self.height / np.e

    def to_config(self):
        return {"kind": "gaussian_bump",
                "center": [self.center.real, self.center.imag],
                "width": self.width, "height": self.height}


@dataclass(frozen=True)
class PolynomialBump:
    """psi(z) = height * (1 - (r/radius)^2)^3 inside its disc, 0 outside.

    Twice continuously differentiable across the boundary, with the
    Laplacian available in closed form:
    (12 h / R^2) (1 - u)(3u - 1), u = (r/R)^2.
    """

    center: complex
    radius: float
    height: float = 1.0

    @property
    def support_disc(self):
        return Disc(self.center, self.radius)

    def __call__(self, z):
        u = np.abs(np.asarray(z) - self.center) ** 2 / self.radius**2
        return np.where(u < 1.0, self.height * (1.0 - np.minimum(u, 1.0)) ** 3,
                        0.0)

    def laplacian(self, z):
        u = np.abs(np.asarray(z) - self.center) ** 2 / self.radius**2
        val = (12.0 * self.height / self.radius**2) * (1.0 - u) * (3.0 * u - 1.0)
        return np.where(u < 1.0, val, 0.0)

    def integral_dm(self):
        return np.pi * self.radius**2 * self.height / 4.0

    def integral_sq_dm(self):
        return np.pi * self.radius**2 * self.height**2 / 7.0

    def integral_abs_laplacian(self):
        # Int_0^1 |(1-u)(3u-1)| du = 8/27
        return 12.0 * np.pi * self.height * 8.0 / 27.0

    def to_config(self):
        return {"kind": "poly_bump",
                "center": [self.center.real, self.center.imag],
                "radius": self.radius, "height": self.height}


TestFunction = (GaussianBump, PolynomialBump)


def bump_from_config(d):
    kind = d.get("kind")
    cx, cy = d.get("center", (0.0, 0.0))
    center = complex(float(cx), float(cy))
    if kind == "gaussian_bump":
        return GaussianBump(center, float(d["width"]),
                            float(d.get("height", 1.0)))
    if kind == "poly_bump":
        return PolynomialBump(center, float(d["radius"]),
                              float(d.get("height", 1.0)))
    raise ValueError("unknown test function kind %r" % (kind,))


def psi_mu_integral(weight: WeightSpec, psi) -> float:
    """Integral of psi against the weight's measure."""
    c = weight.constant_density
    if c is not None:
        return c * psi.integral_dm()
    box = psi.support_disc.bounding_rect()
    return integrate_2d(lambda z: psi(z) * weight.density(z), box,
                        start=48, rel_tol=1e-8)


def psi_abs_laplacian_dm(psi) -> float:
    if hasattr(psi, "integral_abs_laplacian"):
        return psi.integral_abs_laplacian()
    box = psi.support_disc.bounding_rect()
    return integrate_2d(lambda z: np.abs(psi.laplacian(z)), box,
                        start=64, rel_tol=1e-4)


# ---------------------------------------------------------------------------
# Expected linear statistic
# ---------------------------------------------------------------------------


def ek_expected(model: KernelModel, psi, grid_n=48) -> float:
    """Expected value of the smoothed zero count (1/L) * sum psi(zero).

    Quadrature of psi times the log-Laplacian of the kernel diagonal over
    the support, divided by 4 pi L.
    """
    box = psi.support_disc.bounding_rect()
    L = model.L
    prev = None
    n = grid_n
    for _ in range(3):
        z, wq = tensor_grid(box, n)
        mask = psi.support_disc.contains(z, slack=0.0)
        lap = np.zeros(z.size)
        lap[mask] = kernel_log_laplacian(model, z[mask])
        cur = float(np.sum(wq * psi(z) * lap)) / (4.0 * np.pi * L)
        if prev is not None and abs(cur - prev) <= 1e-6 * max(abs(cur), 1e-12):
            return cur
        prev = cur
        n = int(n * 1.5)
    return prev


def mean_bias_envelope(model: KernelModel, psi, grid_n=24) -> float:
    """Certified O(1/L) envelope for |E n(psi, L) - (1/2pi) Int psi dmu|.

    Equals (1/4 pi L) * Int |Delta psi| dm * sup |log K(z,z) - 2 phi_L(z)|
    with the sup taken over the support; the identity behind it is exact,
    so the envelope is a bound up to quadrature error.
    """
    box = psi.support_disc.bounding_rect()
    z, _ = tensor_grid(box, grid_n)
    z = z[psi.support_disc.contains(z)]
    dev = kernel_log_diag(model, z) - 2.0 * model.basis.phi_L(z)
    sup = float(np.max(np.abs(dev)))
    return sup * psi_abs_laplacian_dm(psi) / (4.0 * np.pi * model.L)


# ---------------------------------------------------------------------------
# Variance: exact double integral and closed-form surrogate
# ---------------------------------------------------------------------------


def _dilog(x):
    # Li_2(x) for x in [0, 1]
    return spence(1.0 - x)


def variance_nodes(model, psi, points_per_rho=3.5, n_min=40, n_max_nodes=220):
    """Tensor quadrature nodes resolving the kernel correlation scale."""
    box = psi.support_disc.bounding_rect()
    rho = model.basis.rho_field.rho(psi.support_disc.center)
    n = int(np.clip(points_per_rho * box.width / rho, n_min, n_max_nodes))
    z, wq = tensor_grid(box, n)
    lap = psi.laplacian(z)
    keep = lap != 0.0
    return z[keep], wq[keep], lap[keep]


def variance_theoretical(model: KernelModel, psi, points_per_rho=3.5,
                         chunk=1024) -> dict:
    """Exact variance of n(psi, L) and its closed-form surrogate.

    exact: (1/L^2) IntInt Dpsi(z) Dpsi(w) J(z, w) dm dm where
    J = (1/16 pi^2) Li_2(|K(z,w)|^2 / (K(z,z) K(w,w))); the dilogarithm
    sums the series sum theta^n / n^2 to machine precision.
    surrogate: (1/L^2) Int (Dpsi)^2 rho_L^2 dm.
    """
    L = model.L
    z, wq, lap = variance_nodes(model, psi, points_per_rho)
    wl = wq * lap
    basis = model.basis
    flat = (not model.is_frame) and basis.is_radial and basis.alpha == 2.0
    U = None if flat else unit_features(model, z)
    total = 0.0
    for lo in range(0, z.size, chunk):
        sl = slice(lo, min(lo + chunk, z.size))
        if flat:
            theta = np.exp(-L * np.abs(z[sl, None] - z[None, :]) ** 2)
        else:
            theta = np.clip(np.abs(U[sl] @ U.conj().T) ** 2, 0.0, 1.0)
        J = _dilog(theta) / (16.0 * np.pi**2)
        total += float(wl[sl] @ J @ wl)
    exact = total / L**2
    rho_vals = basis.rho_field.rho_many(z)
    surrogate = float(np.sum(wq * lap**2 * rho_vals**2)) / L**2
    return {"exact": exact, "surrogate": surrogate}


def poisson_linear_mean(weight, psi, intensity_scale) -> float:
    return intensity_scale * psi_mu_integral(weight, psi)


def poisson_linear_variance(weight, psi, L, intensity_scale) -> float:
    c = weight.constant_density
    if c is not None:
        sq = c * psi.integral_sq_dm()
    else:
        box = psi.support_disc.bounding_rect()
        sq = integrate_2d(lambda zz: psi(zz) ** 2 * weight.density(zz), box,
                          start=48, rel_tol=1e-8)
    return intensity_scale * sq / L


# ---------------------------------------------------------------------------
# Normality conditions of the normalized kernel
# ---------------------------------------------------------------------------


def normality_conditions(model: KernelModel, psi, grid_n=56) -> dict:
    """Diagnostics for the two normalized-kernel conditions behind
    asymptotic normality.

    Builds the probability measure nu = (1/c) 1_supp dm / rho^2 (rho at
    scale L = 1) and Theta = (c / 2 pi) Dpsi rho^2, then reports
        sup_integral:        sup_z Int |Xi(z, w)| dnu(w)
        sq_integral:         sup_z Int |Xi(z, w)|^2 dnu(w)
        ratio_liminf_proxy:  IntInt |Xi|^2 Theta Theta dnu dnu / sq_integral
    where Xi is the kernel normalized to 1 on the diagonal.
    """
    basis = model.basis
    field1 = RhoField(basis.weight, L=1.0)
    box = psi.support_disc.bounding_rect()
    z, wq = tensor_grid(box, grid_n)
    inside = psi.support_disc.contains(z)
    z, wq = z[inside], wq[inside]
    rho1 = field1.rho_many(z)
    nu_w = wq / rho1**2
    c_norm = float(np.sum(nu_w))
    nu_w = nu_w / c_norm
    theta_fn = (c_norm / (2.0 * np.pi)) * psi.laplacian(z) * rho1**2
    U = unit_features(model, z)
    G = np.abs(U @ U.conj().T)
    sup_integral = float(np.max(G @ nu_w))
    G2 = G**2
    sq_integral = float(np.max(G2 @ nu_w))
    num = float((theta_fn * nu_w) @ G2 @ (theta_fn * nu_w))
    return {"sup_integral": sup_integral, "sq_integral": sq_integral,
            "ratio_liminf_proxy": num / sq_integral}


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


def wls_line(x, y, weights):
    """Weighted least squares line fit; returns slope, intercept, R^2, se."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    W = np.sum(w)
    xb = np.sum(w * x) / W
    yb = np.sum(w * y) / W
    sxx = np.sum(w * (x - xb) ** 2)
    sxy = np.sum(w * (x - xb) * (y - yb))
    slope = sxy / sxx
    intercept = yb - slope * xb
    resid = y - intercept - slope * x
    ss_res = np.sum(w * resid**2)
    ss_tot = np.sum(w * (y - yb) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(x.size - 2, 1)
    se = np.sqrt(max(ss_res / dof, 0.0) / sxx)
    return {"slope": float(slope), "intercept": float(intercept),
            "r2": float(r2), "slope_se": float(se)}


def fit_log_prob(x, k, n):
    """Binomial WLS of log p against x with profile-likelihood CI on the
    slope (deviance cut at 3.84). Entries with k = 0 or k = n are dropped."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    keep = (k > 0) & (k < n)
    x, k, n = x[keep], k[keep], n[keep]
    p = k / n
    y = np.log(p)
    w = n * p / (1.0 - p)          # inverse variance of log p-hat
    base = wls_line(x, y, w)

    def nll(slope, intercept):
        logp = np.minimum(intercept + slope * x, -1e-12)
        pp = np.exp(logp)
        return -np.sum(k * logp + (n - k) * np.log1p(-pp))

    def prof(slope):
        res = minimize_scalar(lambda a: nll(slope, a),
                              bracket=(base["intercept"] - 2.0,
                                       base["intercept"] + 2.0))
        return res.fun

    best = prof(base["slope"])
    target = best + 1.92  # chi2_1(0.95) / 2

    def bound(direction):
        step = max(abs(base["slope"]) * 0.05, 5.0 * base["slope_se"], 1e-6)
        lo = base["slope"]
        hi = base["slope"] + direction * step
        for _ in range(60):
            if prof(hi) >= target:
                break
            hi += direction * step
        else:
            return hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if prof(mid) < target:
                lo = mid
            else:
                hi = mid
            if abs(hi - lo) < 1e-4 * max(abs(base["slope"]), 1e-9):
                break
        return 0.5 * (lo + hi)

    return {**base, "slope_ci": [float(bound(-1.0)), float(bound(+1.0))],
            "points": int(x.size)}


def fit_decay_exponent(L_values, k, n):
    """Exponent beta in p ~ exp(-c L^beta), from log(-log p) vs log L."""
    L_values = np.asarray(L_values, dtype=float)
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    keep = (k > 0) & (k < n)
    L_values, k, n = L_values[keep], k[keep], n[keep]
    p = k / n
    y = np.log(-np.log(p))
    var_logp = (1.0 - p) / (n * p)
    w = np.log(p) ** 2 / var_logp
    fit = wls_line(np.log(L_values), y, w)
    fit["beta"] = fit.pop("slope")
    fit["beta_se"] = fit.pop("slope_se")
    return fit
