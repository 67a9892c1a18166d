import numpy as np
import pytest

from gafsim.geometry import Rect
from gafsim.quadrature import (adaptive_gl, gamma_weighted_mean,
                               gamma_weighted_tail_mean,
                               gl_endpoint_mapped_adaptive, integrate_2d,
                               tensor_grid)


def test_adaptive_gl_smooth():
    got = adaptive_gl(lambda x: np.exp(-x) * np.sin(3 * x), 0.0, 4.0)
    exact = 3.0 / 10.0 - np.exp(-4.0) * (np.sin(12.0) + 3 * np.cos(12.0)) / 10.0
    assert got == pytest.approx(exact, rel=1e-10)


def test_endpoint_mapped_sqrt():
    # sqrt-type endpoint behaviour is exactly what the cosine map absorbs
    got = gl_endpoint_mapped_adaptive(lambda x: np.sqrt(x * (1.0 - x)), 0.0,
                                      1.0)
    assert got == pytest.approx(np.pi / 8.0, rel=1e-10)


@pytest.mark.parametrize("k", [0.5, 1.0, 3.7, 40.0, 400.0])
def test_gamma_weighted_mean_constant(k):
    assert gamma_weighted_mean(k, lambda u: np.ones_like(u)) == \
        pytest.approx(1.0, rel=1e-10)


def test_gamma_weighted_mean_linear():
    # E[U] = k
    k = 7.3
    got = gamma_weighted_mean(k, lambda u: u / k)
    assert got == pytest.approx(1.0, rel=1e-10)


def test_gamma_tail_mean():
    from scipy.special import gammaincc
    k, u0 = 4.0, 6.5
    got = gamma_weighted_tail_mean(k, lambda u: np.ones_like(u), u0)
    assert got == pytest.approx(gammaincc(k, u0), rel=1e-8)


def test_tensor_grid_polynomial_exact():
    rect = Rect(-1.0, 2.0, 0.0, 1.5)
    z, w = tensor_grid(rect, 8)
    got = np.sum(w * (z.real**2) * (z.imag))
    exact = ((2.0**3 + 1.0) / 3.0) * (1.5**2 / 2.0)
    assert got == pytest.approx(exact, rel=1e-13)


def test_integrate_2d_gaussian():
    rect = Rect(-6, 6, -6, 6)
    got = integrate_2d(lambda z: np.exp(-np.abs(z) ** 2), rect, start=32)
    assert got == pytest.approx(np.pi, rel=1e-8)
