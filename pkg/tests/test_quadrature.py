import warnings

import numpy as np
import pytest
from scipy import integrate as sci

from ftn_isac.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    QuadratureWarning,
    breakpoints,
    fourier_integral,
    integrate,
)


def test_rule_weights_are_consistent():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-14)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(NODES, -NODES[::-1])


def test_kronrod_exact_for_degree_22():
    val = integrate(lambda x: x ** 22, [0.0, 1.0])
    assert val == pytest.approx(1 / 23, rel=1e-14)


@pytest.mark.parametrize("func, lo, hi", [
    (lambda x: np.exp(-x) * np.cos(7 * x), 0.0, 3.0),
    (lambda x: np.abs(x - 0.3) * np.exp(x), 0.0, 1.0),
    (lambda x: 1 / (1 + 25 * x ** 2), -1.0, 1.0),
])
def test_matches_scipy_quad(func, lo, hi):
    ref, _ = sci.quad(func, lo, hi, epsabs=1e-13, limit=500, points=[0.3] if lo < 0.3 < hi else None)
    assert integrate(func, breakpoints([0.3], lo, hi), atol=1e-12) == pytest.approx(ref, abs=1e-11)


def test_vector_valued_integrand():
    k = np.arange(1, 6)
    val = integrate(lambda x: np.cos(np.outer(x, k)), [0.0, np.pi / 2], atol=1e-13)
    assert np.allclose(val, np.sin(k * np.pi / 2) / k, atol=1e-12)


def test_complex_integrand():
    val = integrate(lambda x: np.exp(1j * 3 * x), [0.0, 2.0])
    assert val == pytest.approx((np.exp(6j) - 1) / 3j, abs=1e-13)


def test_empty_range_is_zero():
    assert integrate(lambda x: np.ones_like(x), breakpoints([], 1.0, 1.0)) == 0.0


def test_breakpoints_cover_range_and_respect_width():
    e = breakpoints([0.25, 0.25 + 1e-17, 2.0, -1.0], 0.0, 1.0, max_width=0.1)
    assert e[0] == 0.0 and e[-1] == 1.0
    assert np.all(np.diff(e) <= 0.1 + 1e-15)
    assert np.any(np.isclose(e, 0.25))


def test_budget_exhaustion_warns():
    with pytest.warns(QuadratureWarning):
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), [0.0, 1.0], atol=1e-15, max_rounds=3)


def test_fourier_integral_matches_closed_form():
    t = np.array([0.0, 0.7, 13.2, 150.0])
    val = fourier_integral(lambda f: np.ones_like(f), t, -0.5, 0.5)
    assert np.allclose(val, np.sinc(t), atol=1e-13)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cos_val = fourier_integral(lambda f: f ** 2, t, 0.0, 1.0, cosine=True)
    ref = [sci.quad(lambda f: f ** 2 * np.cos(2 * np.pi * f * s), 0, 1, limit=800, epsabs=1e-13)[0] for s in t]
    assert np.allclose(cos_val, ref, atol=1e-11)
