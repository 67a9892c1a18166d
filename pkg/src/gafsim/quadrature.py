"""Small adaptive quadrature toolkit.

Everything here is plain Gauss-Legendre with panel bisection; the error
estimate on a panel is the difference between an n-point and a 2n-point
rule. Integrands are evaluated on node arrays, never point by point.
"""

from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import QuadratureFailure


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_values(f, a, b, n):
    x, w = _leggauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def adaptive_gl(f, a, b, rel_tol=1e-10, abs_floor=0.0, order=24,
                max_panels=4000):
    """Integrate f over [a, b] by adaptive panel bisection.

    f must accept a numpy array and return one. Raises QuadratureFailure
    if the panel budget runs out before the error estimate drops below
    rel_tol * |integral| + abs_floor.
    """
    if b <= a:
        return 0.0
    stack = [(a, b, _panel_values(f, a, b, order))]
    total = 0.0
    err_total = 0.0
    done = []
    n_panels = 1
    while stack:
        lo, hi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel_values(f, lo, mid, order)
        right = _panel_values(f, mid, hi, order)
        fine = left + right
        err = abs(fine - coarse)
        scale = abs(fine) + sum(abs(v) for v, _ in done) + sum(
            abs(c) for _, _, c in stack)
        if err <= max(rel_tol * max(scale, abs(fine)), abs_floor) * 0.5 or (
                hi - lo) < 1e-15 * (b - a):
            done.append((fine, err))
        else:
            n_panels += 2
            if n_panels > max_panels:
                raise QuadratureFailure(
                    "adaptive_gl: panel budget exhausted on [%g, %g]" % (a, b))
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
    total = np.sum(np.array([v for v, _ in done]))
    err_total = np.sum(np.array([e for _, e in done]))
    if err_total > rel_tol * max(abs(total), abs_floor / max(rel_tol, 1e-300)) \
            and err_total > abs_floor:
        raise QuadratureFailure("adaptive_gl: error estimate %g above tolerance"
                                % err_total)
    return float(total)


def gl_endpoint_mapped(f, a, b, order=48, panels=1):
    """Integrate f over [a, b] with the cosine endpoint map.

    The substitution s = (a+b)/2 - (b-a)/2 * cos(pi t) clusters nodes at
    both endpoints and removes square-root-type endpoint singularities
    in the derivative of f (arc-length weights of a disc cut by circles
    have exactly that behaviour).
    """
    if b <= a:
        return 0.0
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)

    def g(t):
        s = mid - half * np.cos(np.pi * t)
        return f(s) * half * np.pi * np.sin(np.pi * t)

    edges = np.linspace(0.0, 1.0, panels + 1)
    return float(sum(_panel_values(g, lo, hi, order)
                     for lo, hi in zip(edges[:-1], edges[1:])))


def gl_endpoint_mapped_adaptive(f, a, b, rel_tol=1e-11, order=48):
    prev = gl_endpoint_mapped(f, a, b, order=order, panels=1)
    for panels in (2, 4, 8, 16, 32, 64):
        cur = gl_endpoint_mapped(f, a, b, order=order, panels=panels)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureFailure("endpoint-mapped rule did not converge")


def _gamma_density_integral(k, h, lo, hi, rel_tol, sub_power=None, order=32,
                            panel_schedule=(8, 16, 32, 64, 128, 256)):
    """Int_lo^hi u^(k-1) e^-u h(u) du / Gamma(k).

    Below u = 1 the substitution u = t^p (p = sub_power, default 1/k)
    absorbs the u^(k-1) singularity; callers whose h is smooth in u^(1/p)
    should pass that p so the substituted integrand stays smooth too.
    """
    lg = gammaln(k)
    if sub_power is None:
        # integer power keeps t -> h(t^p) smooth; p k >= 5 keeps the
        # power factor t^(pk-1) several times differentiable at 0
        p = 1.0 if k >= 5.0 else float(int(np.ceil(5.0 / k)))
    else:
        p = float(sub_power)
        if p * k < 1.0:
            p = np.ceil(1.0 / (p * k)) * p
    split = min(max(lo, 1.0), hi)

    def g(u):
        u = np.maximum(u, 1e-300)
        return np.exp((k - 1.0) * np.log(u) - u - lg) * h(u)

    def g_sub(t):
        t = np.maximum(t, 1e-300)
        u = t**p
        return p * np.exp((p * k - 1.0) * np.log(t) - u - lg) * h(u)

    prev = None
    for panels in panel_schedule:
        cur = 0.0
        if split > lo:
            edges = np.linspace(lo ** (1.0 / p), split ** (1.0 / p), panels + 1)
            cur += sum(_panel_values(g_sub, e0, e1, order)
                       for e0, e1 in zip(edges[:-1], edges[1:]))
        if hi > split:
            edges = np.linspace(split, hi, panels + 1)
            cur += sum(_panel_values(g, e0, e1, order)
                       for e0, e1 in zip(edges[:-1], edges[1:]))
        if prev is not None and abs(cur - prev) <= rel_tol * max(abs(cur), 1e-320):
            return float(cur)
        prev = cur
    raise QuadratureFailure(
        "gamma-density integral did not converge (k=%g, lo=%g)" % (k, lo))


def gamma_weighted_mean(k, h, rel_tol=1e-11, spread=12.0, sub_power=None):
    """E[h(U)] for U ~ Gamma(k, 1), h smooth positive and O(1).

    Integrates over a window of +-spread standard deviations; the
    truncated tail mass is ~exp(-60) at the default spread and h is
    bounded, far below rel_tol.
    """
    sd = np.sqrt(max(k, 1.0))
    lo = max(0.0, k - spread * sd - 30.0)
    hi = k + spread * sd + 60.0
    return _gamma_density_integral(k, h, lo, hi, rel_tol, sub_power=sub_power)


def gamma_weighted_tail_mean(k, h, u0, rel_tol=1e-9, sub_power=None):
    """E[h(U); U > u0] for U ~ Gamma(k, 1) (unnormalized tail mean)."""
    sd = np.sqrt(max(k, 1.0))
    hi = max(k + 12.0 * sd + 60.0, u0 + 40.0 * np.sqrt(max(u0, 1.0)) + 60.0)
    lo = max(u0, 0.0)
    if lo >= hi:
        return 0.0
    return _gamma_density_integral(k, h, lo, hi, rel_tol, sub_power=sub_power)


def tensor_grid(rect, nx, ny=None):
    """Tensor Gauss-Legendre nodes and weights on a rectangle.

    Returns (points, weights) with points complex of length nx*ny.
    """
    ny = nx if ny is None else ny
    x, wx = _leggauss(nx)
    y, wy = _leggauss(ny)
    xs = 0.5 * (rect.xmin + rect.xmax) + 0.5 * rect.width * x
    ys = 0.5 * (rect.ymin + rect.ymax) + 0.5 * rect.height * y
    wxs = 0.5 * rect.width * wx
    wys = 0.5 * rect.height * wy
    gz = xs[None, :] + 1j * ys[:, None]
    gw = wys[:, None] * wxs[None, :]
    return gz.ravel(), gw.ravel()


def integrate_2d(f, rect, start=24, rel_tol=1e-8, max_n=640):
    """Tensor-rule integral of f over a rectangle with mesh doubling."""
    n = start
    prev = None
    while n <= max_n:
        z, w = tensor_grid(rect, n)
        cur = float(np.sum(w * f(z)))
        if prev is not None and abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
        n *= 2
    raise QuadratureFailure("integrate_2d did not converge at n=%d" % max_n)
