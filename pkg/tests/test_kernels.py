import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropshape.kernels import (
    KernelError, bessel_critical_kappa, bessel_first_moment_exact, build_kernel,
    check_hypotheses, derived_kernel, k1n_constant, moment, rho_first_moment,
    slice_tail_exact, unnormalized_moment,
)

FAMILIES = ["exponential", "gaussian", "compact_bump", "truncated_riesz", "bessel"]


def test_k1n():
    assert_allclose(k1n_constant(2), 2 / math.pi, rtol=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_normalization(family):
    ker = build_kernel(family)
    assert_allclose(moment(ker, 1), math.pi / 2, rtol=1e-10)
    for eps in (1.0, 0.1):
        assert_allclose(rho_first_moment(ker.at_scale(eps)), 1.0, rtol=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_hypotheses_hold(family):
    assert check_hypotheses(build_kernel(family)).all_ok


def test_exponential_values(exp_kernel):
    fam = exp_kernel.at_scale(1.0)
    assert_allclose(4 * slice_tail_exact(fam, 1.0), 3 / math.e, rtol=1e-12)
    assert_allclose(fam.slice_tail(0.0), 0.5, rtol=1e-12)
    assert fam.slice_tail(50.0) <= 1e-12
    assert_allclose(derived_kernel(fam, "rho_eps", 1.0), 0.25 / math.e, rtol=1e-13)
    assert_allclose(derived_kernel(exp_kernel.at_scale(0.5), "eta_eps", 1.0), 2 * math.exp(-2),
                    rtol=1e-13)


def test_slice_table_matches_exact(exp_kernel):
    fam = exp_kernel.at_scale(0.3)
    d = np.array([0.0, 0.01, 0.2, 0.5, 1.3])
    exact = [slice_tail_exact(fam, x) for x in d]
    assert_allclose(fam.slice_tail(d), exact, atol=1e-11)


def test_second_moment_ratio(exp_kernel):
    # for decreasing profiles the second moment is (n + 1) times the first
    assert_allclose(moment(exp_kernel, 2), 1.5 * math.pi, rtol=1e-10)


def test_bessel_threshold():
    kb = build_kernel("bessel", {"kappa": math.pi**2, "alpha": 1.0})
    assert_allclose(unnormalized_moment(kb, 1), math.pi, rtol=1e-10)
    assert_allclose(bessel_first_moment_exact(math.pi**2, 1.0), math.pi, rtol=1e-13)
    assert_allclose(bessel_critical_kappa(1.0), math.pi**2, rtol=1e-13)


def test_invalid_inputs(exp_kernel):
    with pytest.raises(KernelError, match="epsilon must be positive"):
        exp_kernel.at_scale(-1.0)
    with pytest.raises(KernelError):
        build_kernel("nope")
