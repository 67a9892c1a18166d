import threading

import numpy as np
import pytest
from scipy.integrate import quad

from gafsim.errors import UnsupportedWeightOperation
from gafsim.geometry import Rect
from gafsim.measure import (RhoField, WeightSpec, dmu_approx,
                            doubling_ratio_scan, get_radial_profile,
                            local_flatness_scan, mu_disc, rho, weight_eval)


def test_weight_eval_examples():
    assert weight_eval(WeightSpec.radial_power(2.0), 1.0) == 0.5
    assert weight_eval(WeightSpec.radial_power(4.0), 0.0) == 0.0
    assert weight_eval(WeightSpec.re_square(), 2 + 1j) == 4.0


def test_weight_eval_tabulated_unsupported():
    w = WeightSpec.tabulated([0, 1], [0, 1], [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(UnsupportedWeightOperation):
        weight_eval(w, 0.3)


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightSpec.radial_power(-1.0)
    with pytest.raises(ValueError):
        WeightSpec.tabulated([0, 1], [0, 1], [[1.0, 0.0], [1.0, 1.0]])


def test_density_values():
    w = WeightSpec.radial_power(4.0)
    z = np.array([0.5, 1.0, 2.0 + 1j])
    assert np.allclose(w.density(z), 8.0 * np.abs(z) ** 2)
    assert np.all(WeightSpec.re_square().density(z) == 2.0)


def test_mu_disc_closed_forms():
    w2 = WeightSpec.radial_power(2.0)
    assert mu_disc(w2, 0.3 + 0.2j, 0.7, L=3.0) == pytest.approx(
        2 * np.pi * 3 * 0.49, rel=1e-12)
    for a in (1.2, 3.0, 4.0):
        w = WeightSpec.radial_power(a)
        assert mu_disc(w, 0.0, 0.8, L=2.0) == pytest.approx(
            np.pi * a * 2.0 * 0.8**a, rel=1e-12)
    assert mu_disc(w2, 1.0, 0.0) == 0.0


def test_mu_disc_lens_vs_generic_quadrature():
    w = WeightSpec.radial_power(4.0)
    a = mu_disc(w, 0.5 + 0.2j, 0.3)
    b = mu_disc(w, 0.5 + 0.2j, 0.3, method="quadrature")
    assert a == pytest.approx(b, rel=1e-9)


def test_mu_disc_quadrature_vs_closed_form_at_origin():
    for alpha in (3.0, 4.0):
        w = WeightSpec.radial_power(alpha)
        got = mu_disc(w, 0.0, 0.8, L=2.0, method="quadrature")
        assert got == pytest.approx(np.pi * alpha * 2.0 * 0.8**alpha,
                                    rel=1e-9)


def test_mu_disc_lens_vs_scipy_singular():
    # origin on the boundary circle, alpha < 2: integrable singularity
    a, d, r = 1.2, 0.4, 0.4
    w = WeightSpec.radial_power(a)

    def integrand(s):
        c = np.clip((s * s + d * d - r * r) / (2 * s * d), -1, 1)
        return 0.5 * a * a * s ** (a - 1) * 2 * np.arccos(c)

    ref, _ = quad(integrand, 0, d + r, points=[1e-9, 0.05, d + r - 1e-9],
                  limit=200)
    assert mu_disc(w, d, r) == pytest.approx(ref, rel=1e-7)


def test_mu_disc_tabulated_linear_density():
    # bilinear interpolation reproduces an affine density exactly, so the
    # polar quadrature must integrate it exactly too
    xs = np.linspace(-2, 2, 9)
    ys = np.linspace(-2, 2, 7)
    vals = 2.0 + 0.3 * xs[None, :] + 0.0 * ys[:, None]
    w = WeightSpec.tabulated(xs, ys, np.broadcast_to(vals, (7, 9)))
    z0, r = 0.4 + 0.3j, 0.5
    expected = (2.0 + 0.3 * z0.real) * np.pi * r**2
    assert mu_disc(w, z0, r, L=2.0) == pytest.approx(2.0 * expected, rel=1e-9)


def test_rho_closed_forms():
    fld = RhoField(WeightSpec.radial_power(2.0), L=5.0)
    assert rho(fld, 0.7 - 0.3j) == pytest.approx((2 * np.pi * 5) ** -0.5,
                                                 rel=1e-10)
    for a in (3.0, 4.0):
        fld = RhoField(WeightSpec.radial_power(a), L=7.0)
        assert rho(fld, 0.0) == pytest.approx((np.pi * a * 7) ** (-1 / a),
                                              rel=1e-9)


def test_rho_monotone_in_L():
    w = WeightSpec.radial_power(3.0)
    z = 0.8 + 0.1j
    r1 = RhoField(w, L=1.0).rho(z)
    r4 = RhoField(w, L=4.0).rho(z)
    assert r4 < r1


def test_rho_scaling_laws():
    w = WeightSpec.radial_power(2.0)
    z = 0.4 + 0.9j
    assert RhoField(w, L=1.0).rho(z) / RhoField(w, L=9.0).rho(z) == \
        pytest.approx(3.0, rel=1e-9)
    for a in (3.0, 4.0):
        w = WeightSpec.radial_power(a)
        ratio = RhoField(w, L=1.0).rho(0) / RhoField(w, L=16.0).rho(0)
        assert ratio == pytest.approx(16.0 ** (1 / a), rel=1e-9)


def test_defining_identity_residual_1000_pairs():
    rng = np.random.default_rng(42)
    worst = 0.0
    for a in (2.0, 3.0, 4.0):
        w = WeightSpec.radial_power(a)
        fields = {}
        for _ in range(334):
            L = float(rng.uniform(1.0, 100.0))
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            key = round(L, 3)
            if key not in fields:
                fields[key] = RhoField(w, L=L)
            fld = fields[key]
            resid = abs(mu_disc(w, z, fld.rho(z), L=fld.L) - 1.0)
            worst = max(worst, resid)
    assert worst <= 1e-7


def test_rho_lipschitz_spot_check():
    w = WeightSpec.radial_power(4.0)
    fld = RhoField(w, L=3.0)
    rng = np.random.default_rng(1)
    for _ in range(40):
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        zeta = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        assert abs(fld.rho(z) - fld.rho(zeta)) <= abs(z - zeta) + 1e-8


def test_dmu_basics():
    fld = RhoField(WeightSpec.radial_power(2.0), L=5.0)
    assert dmu_approx(fld, 0.3, 0.3) == 0.0
    expect = abs(1 + 1j) * (2 * np.pi * 5) ** 0.5
    assert dmu_approx(fld, 0.0, 1 + 1j) == pytest.approx(expect, rel=1e-12)
    fld4 = RhoField(WeightSpec.radial_power(4.0), L=2.0)
    d1 = dmu_approx(fld4, 0.2 + 0.1j, 1.0 - 0.4j)
    d2 = dmu_approx(fld4, 1.0 - 0.4j, 0.2 + 0.1j)
    assert d1 == pytest.approx(d2, rel=1e-9)


def test_dmu_segment_additivity():
    # with the midpoint on the segment the triangle inequality is an
    # equality up to quadrature
    fld = RhoField(WeightSpec.radial_power(3.0), L=2.0)
    a, c = 0.1 + 0.2j, 1.4 - 0.5j
    b = a + 0.37 * (c - a)
    lhs = dmu_approx(fld, a, c)
    rhs = dmu_approx(fld, a, b) + dmu_approx(fld, b, c)
    assert lhs <= rhs + 1e-7
    assert lhs == pytest.approx(rhs, rel=1e-7)


def test_doubling_ratio_scan():
    region = Rect(-1, 1, -1, 1)
    w2 = WeightSpec.radial_power(2.0)
    assert doubling_ratio_scan(w2, region, [0.2, 0.5]) == pytest.approx(
        4.0, rel=1e-9)
    w4 = WeightSpec.radial_power(4.0)
    got = doubling_ratio_scan(w4, Rect(-0.4, 0.4, -0.4, 0.4), [0.3],
                              grid_n=3)
    assert got == pytest.approx(16.0, rel=1e-6)   # grid contains the origin
    assert got >= 1.0


def test_local_flatness_scan():
    region = Rect(-1, 1, -1, 1)
    flat = local_flatness_scan(WeightSpec.radial_power(2.0), region, grid_n=3)
    assert flat["min_ratio"] == pytest.approx(1.0, rel=1e-8)
    assert flat["max_ratio"] == pytest.approx(1.0, rel=1e-8)
    flat_re = local_flatness_scan(WeightSpec.re_square(), region, grid_n=3)
    assert flat_re["max_ratio"] / flat_re["min_ratio"] == pytest.approx(
        1.0, rel=1e-8)
    near0 = local_flatness_scan(WeightSpec.radial_power(4.0),
                                Rect(-0.3, 0.3, -0.3, 0.3), grid_n=3)
    assert near0["max_ratio"] / near0["min_ratio"] > 1.5


def test_rho_cache_thread_safety():
    fld = RhoField(WeightSpec.radial_power(3.0), L=4.0)
    pts = [complex(0.1 * k, 0.05 * k) for k in range(24)]
    results = {}

    def worker(tag):
        results[tag] = [fld.rho(z) for z in pts]

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    base = results[0]
    for tag in range(1, 6):
        assert results[tag] == base


def test_radial_profile_certified():
    prof = get_radial_profile(WeightSpec.radial_power(4.0), 5.0)
    assert prof.residual <= 1e-7
    fld = RhoField(WeightSpec.radial_power(4.0), L=1.0)
    ss = np.array([0.05, 0.7, 1.9, 4.2])
    assert np.max(np.abs(prof(ss) / fld.rho_many(ss) - 1.0)) < 1e-7
