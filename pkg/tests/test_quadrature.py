import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropshape import quadrature as quad


def test_polynomial_exact_on_one_panel():
    res = quad.adaptive(lambda x: x**13 - 3 * x**4, [0.0, 2.0])
    assert_allclose(res.value, 2**14 / 14 - 3 * 2**5 / 5, rtol=1e-14)
    assert res.n_intervals == 1


def test_singular_endpoint():
    res = quad.adaptive(lambda x: 1 / np.sqrt(x), [0.0, 1.0], rtol=1e-10)
    assert_allclose(res.value, 2.0, rtol=1e-9)


def test_per_panel_values_sum_to_total():
    res = quad.adaptive(np.exp, [0.0, 1.0, 2.0, 3.0])
    assert_allclose(res.panels, np.diff(np.exp([0.0, 1.0, 2.0, 3.0])), rtol=1e-13)
    assert_allclose(res.value, res.panels.sum(), rtol=1e-15)


def test_to_infinity():
    val, ok = quad.integrate_to_infinity(lambda x: np.exp(-x), 0.0)
    assert ok
    assert_allclose(val, 1.0, rtol=1e-12)
    _, ok = quad.integrate_to_infinity(lambda x: 1 / (1 + x), 0.0, max_doublings=30)
    assert not ok


def test_budget_exhaustion_raises():
    with pytest.raises(quad.QuadratureError):
        quad.adaptive(lambda x: np.sign(np.sin(1 / x)), [1e-9, 1.0], max_intervals=500)


def test_gauss_panels():
    x, w = quad.panels(quad.graded_edges(0.0, 1.0, smallest=1e-8, uniform=4), order=8)
    assert_allclose(np.sum(w * np.cos(x)), math.sin(1.0), rtol=1e-14)
