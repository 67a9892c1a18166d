import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln, ive

from gafsim.errors import OutOfCertifiedDomain, TruncationBudgetExceeded
from gafsim.fock import (build_basis, build_orthogonalized_basis,
                         fast_decay_integral, kernel_eval, kernel_log_diag,
                         kernel_log_laplacian, make_basis_kernel,
                         make_frame_kernel)
from gafsim.geometry import Rect
from gafsim.measure import RhoField, WeightSpec, get_radial_profile
from gafsim.pointprocess import make_sampling_sequence
from gafsim.quadrature import _leggauss


def test_flat_norms_closed_form(basis2_L10):
    b = basis2_L10
    n = np.arange(b.n_max + 1)
    expected = np.log(np.pi * np.sqrt(2.0)) + 0.5 * gammaln(n + 1.0) \
        - 0.5 * n * np.log(10.0)
    assert np.max(np.abs(b.log_norms - expected)) < 1e-12
    # norm of the constant function: ||1||^2 = 2 pi^2
    assert np.exp(2 * b.log_norms[0]) == pytest.approx(2 * np.pi**2,
                                                       rel=1e-12)


def test_norm_invariants(basis3_L5):
    b = basis3_L5
    ln = b.log_norms
    # ratio test: norms[n+1] * norms[n-1] >= norms[n]^2 from n = 5 on
    gap = ln[2:] + ln[:-2] - 2.0 * ln[1:-1]
    assert np.min(gap[4:]) > -1e-10
    lo, hi = b.gamma_growth_gap
    assert np.isfinite(lo) and np.isfinite(hi) and hi - lo < 3.0
    assert b.tail_bound <= 1e-10


def test_flat_kernel_closed_form(kernel2_L10):
    rng = np.random.default_rng(0)
    z = rng.uniform(-0.8, 0.8, 24) + 1j * rng.uniform(-0.8, 0.8, 24)
    w = rng.uniform(-0.8, 0.8, 24) + 1j * rng.uniform(-0.8, 0.8, 24)
    got = kernel_eval(kernel2_L10, z, w)
    exact = np.exp(10.0 * z * np.conj(w)) / (2 * np.pi**2)
    assert np.max(np.abs(got / exact - 1.0)) < 1e-10


def test_kernel_hermitian_and_diag(kernel3_L5):
    rng = np.random.default_rng(5)
    z = rng.uniform(-0.9, 0.9, 10) + 1j * rng.uniform(-0.9, 0.9, 10)
    w = rng.uniform(-0.9, 0.9, 10) + 1j * rng.uniform(-0.9, 0.9, 10)
    a = kernel_eval(kernel3_L5, z, w)
    b = kernel_eval(kernel3_L5, w, z)
    scale = np.exp(0.5 * (kernel_log_diag(kernel3_L5, z)
                          + kernel_log_diag(kernel3_L5, w)))
    assert np.max(np.abs(a - np.conj(b)) / scale) < 1e-14
    diag = kernel_eval(kernel3_L5, z, z)
    assert np.all(diag.real > 0)
    assert np.max(np.abs(diag.imag) / diag.real) < 1e-14


def test_out_of_domain_raises(kernel2_L10):
    with pytest.raises(OutOfCertifiedDomain):
        kernel_eval(kernel2_L10, 2.0, 0.1)


def test_truncation_budget():
    with pytest.raises(TruncationBudgetExceeded):
        build_basis(2.0, 50.0, 3.0, n_cap=40)


def test_log_laplacian_flat_and_rotation(kernel2_L10, kernel3_L5):
    z = np.array([0.2 + 0.1j, -0.4j, 0.6])
    lap = kernel_log_laplacian(kernel2_L10, z)
    assert np.max(np.abs(lap / 40.0 - 1.0)) < 1e-5
    zr = 0.7 * np.exp(1j * np.array([0.0, 0.9, 2.3]))
    lap3 = kernel_log_laplacian(kernel3_L5, zr)
    assert np.max(np.abs(lap3 / lap3[0] - 1.0)) < 1e-6


def test_log_laplacian_rho_band(kernel3_L5):
    fld = kernel3_L5.basis.rho_field
    z = np.array([0.15, 0.4 + 0.3j, 0.8j, 1.0, 1.2 - 0.2j])
    prod = kernel_log_laplacian(kernel3_L5, z) * fld.rho_many(z) ** 2
    assert np.all(prod > 0.2) and np.all(prod < 5.0)


def test_gram_orthonormality_alpha3(basis3_L5):
    # independent radial quadrature (scipy) of the diagonal Gram entries;
    # off-diagonals vanish by the angular integral, checked once below
    b = basis3_L5
    L, a = b.L, b.alpha
    prof = get_radial_profile(b.weight, 12.0)
    worst = 0.0
    for n in range(0, 31, 3):
        f = lambda s: s ** (2 * n + 1) * np.exp(-L * s**a) * \
            (L ** (1 / a) / prof(L ** (1 / a) * s)) ** 2
        hi = (((2 * n + 2) / a + 14 * np.sqrt((2 * n + 2) / a) + 50.0)
              ** (1 / a)) / L ** (1 / a)
        val, _ = quad(f, 0.0, hi, limit=400)
        worst = max(worst, abs(2 * np.pi * val * np.exp(-2 * b.log_norms[n])
                               - 1.0))
    assert worst <= 1e-7
    theta = 2 * np.pi * np.arange(64) / 64
    assert abs(np.mean(np.exp(1j * 3 * theta))) < 1e-14


def test_reproducing_property_alpha3(basis3_L5, kernel3_L5):
    # <e_k, K(., w)> over the plane equals e_k(w); radial reduction with
    # Gauss-Legendre panels plus the exact angular integral
    b = basis3_L5
    L, a = b.L, b.alpha
    prof = get_radial_profile(b.weight, 12.0)
    x, wq = _leggauss(96)
    hi = 2.6
    s = 0.5 * hi * (x + 1.0)
    ws = 0.5 * hi * wq
    meas = 2 * np.pi * s * np.exp(-L * s**a) * \
        (L ** (1 / a) / prof(L ** (1 / a) * s)) ** 2 * ws
    for k in (0, 3, 7, 10):
        for wpt in (0.3 + 0.2j, -0.5j):
            # angular integral leaves the n = k kernel mode only
            radial = s**k * np.conj(s**k * np.conj(wpt) ** k
                                    * np.exp(-2 * b.log_norms[k]))
            lhs = np.sum(meas * radial) * np.exp(-b.log_norms[k])
            rhs = wpt**k * np.exp(-b.log_norms[k])
            assert abs(lhs / rhs - 1.0) < 1e-6


def test_truncation_certificate(kernel2_L10, basis2_L10):
    longer = make_basis_kernel(build_basis(2.0, 10.0, 1.5,
                                           n_max=int(1.25 * basis2_L10.n_max)))
    rng = np.random.default_rng(2)
    z = rng.uniform(-1.0, 1.0, 30) + 1j * rng.uniform(-1.0, 1.0, 30)
    w = rng.uniform(-1.0, 1.0, 30) + 1j * rng.uniform(-1.0, 1.0, 30)
    a = kernel_eval(kernel2_L10, z, w)
    c = kernel_eval(longer, z, w)
    scale = np.exp(0.5 * (kernel_log_diag(longer, z)
                          + kernel_log_diag(longer, w)))
    assert np.max(np.abs(a - c) / scale) <= 10.0 * basis2_L10.tail_bound


def test_scaling_identity_alpha3():
    L = 7.0
    b = build_basis(3.0, L, 1.2)
    b1 = build_basis(3.0, 1.0, 1.2 * L ** (1 / 3.0) * 1.001)
    km, km1 = make_basis_kernel(b), make_basis_kernel(b1)
    z = np.array([0.3 + 0.2j, -0.8j, 1.1])
    w = np.array([0.1 - 0.7j, 0.4, -0.9 + 0.3j])
    s = L ** (1 / 3.0)
    lhs = kernel_eval(km, z, w)
    rhs = kernel_eval(km1, s * z, s * w)
    assert np.max(np.abs(lhs / rhs - 1.0)) < 1e-9


def test_fast_decay_oracle_flat():
    L = 7.0
    b = build_basis(2.0, L, 1.5)
    km = make_basis_kernel(b)
    rho1 = RhoField(b.weight, L=1.0).rho(0.0)
    r, R = 0.5, 2.0
    T = R * rho1
    got = fast_decay_integral(km, 0.0, r, R)

    def oracle(zr):
        f = lambda s: ive(0, 2 * L * zr * s) * \
            np.exp(2 * L * zr * s - L * s * s) * s
        val, _ = quad(f, T, T + 6.0, limit=200)
        return np.exp(-L * zr**2) * (2 * np.pi * L) * (2 * np.pi) * val \
            / (4 * np.pi**4)

    ref = max(oracle(zr) for zr in np.linspace(0.0, r * rho1, 24))
    assert got == pytest.approx(ref, rel=1e-6)
    assert fast_decay_integral(km, 0.0, r, 3.0) < got
    off = fast_decay_integral(km, 0.35, r, 2.0)
    assert off > 0


def test_frame_kernel_diag_comparable(basis2_L10, kernel2_L10):
    fld = RhoField(basis2_L10.weight, L=10.0)
    window = Rect(-1.0, 1.0, -1.0, 1.0)
    seq = make_sampling_sequence(fld, window)
    fm = make_frame_kernel(basis2_L10, seq.points, window)
    z = np.array([0.1 + 0.2j, -0.3, 0.25j])
    ratio = np.exp(kernel_log_diag(fm, z) - kernel_log_diag(kernel2_L10, z))
    assert ratio.max() / ratio.min() < 1.5
    a = kernel_eval(fm, z, np.roll(z, 1))
    b = kernel_eval(fm, np.roll(z, 1), z)
    assert np.max(np.abs(a - np.conj(b)) / np.abs(a)) < 1e-12


def test_ortho_basis_reproducing():
    w = WeightSpec.re_square()
    L = 6.0
    b = build_orthogonalized_basis(w, L, 1.0, n_cap=48, large_disc_factor=1.6)
    km = make_basis_kernel(b)
    rb = b.domain_radius
    # polar quadrature matched to the inner product on the large disc
    x, wq = _leggauss(220)
    s = 0.5 * rb * (x + 1.0)
    ws = 0.5 * rb * wq
    theta = 2 * np.pi * np.arange(512) / 512
    inv_rho2 = b.rho_field.rho(0.0) ** -2
    worst = 0.0
    for wpt in (0.2 + 0.1j, -0.35j):
        acc = np.zeros(b.n_max + 1, dtype=complex)
        for si, wsi in zip(s, ws):
            ring = si * np.exp(1j * theta)
            F = b.features(ring)
            kv = kernel_eval(km, ring, np.full(ring.size, wpt))
            mass = np.exp(-2 * L * ring.real**2) * inv_rho2 * si * wsi \
                * (2 * np.pi / 512)
            acc += (mass * np.conj(kv)) @ F
        rhs = np.conj(b.features(np.array([wpt]))[0])
        big = np.abs(rhs) > 1e-3 * np.max(np.abs(rhs))
        worst = max(worst, np.max(np.abs(acc[big] - np.conj(rhs[big]))
                                  / np.abs(rhs[big])))
    assert worst < 1e-5
