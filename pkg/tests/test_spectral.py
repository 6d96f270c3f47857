import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropshape.spectral import (
    AliasingError, NonLipschitzWarning, SphericalField, circle_grid, constraint_checks,
    deficit_checks, expand, grid_l2_sq, nonlocal_form_Q, polar_terms, psi_constant_check,
    random_field, shape_from_field, sphere_grid, synthesize,
)


def test_cos3_single_coefficient():
    f = expand(np.cos(3 * circle_grid(64)), 2, 5)
    energy = f.degree_energy()
    assert_allclose(energy[3], math.pi, rtol=1e-14)
    assert_allclose(np.delete(energy, 3), 0.0, atol=1e-28)


def test_x1_on_sphere():
    P, A, _ = sphere_grid(8, 16)
    PP, AA = np.meshgrid(P, A, indexing="ij")
    f = expand(np.sin(PP) * np.cos(AA), 3, 2)
    assert_allclose(np.abs(f.coeffs[1]).max(), math.sqrt(4 * math.pi / 3), rtol=1e-13)
    assert_allclose(f.degree_energy()[[0, 2]], 0.0, atol=1e-26)


@pytest.mark.parametrize("n", [2, 3])
def test_round_trip_and_parseval(n):
    f = random_field(np.random.default_rng(n), L=8, n=n)
    u = synthesize(f)
    g = expand(u, n, 8)
    for a, b in zip(f.coeffs, g.coeffs):
        assert_allclose(a, b, atol=1e-10)
    assert_allclose(grid_l2_sq(u, n), f.l2_norm_sq, rtol=1e-8)


def test_aliasing_guard():
    with pytest.raises(AliasingError):
        expand(np.zeros(20), 2, 8)
    with pytest.raises(AliasingError):
        expand(np.zeros((10, 20)), 3, 8)


def test_form_vanishes_on_constants(exp_kernel):
    f = SphericalField.from_entries(2, 3, [(0, 0, 2.0)])
    assert nonlocal_form_Q(f, exp_kernel.at_scale(0.1)).q_value == 0.0


def test_trapezoid_matches_modal(exp_kernel):
    f = expand(np.cos(3 * circle_grid(64)), 2, 4)
    rep = nonlocal_form_Q(f, exp_kernel.at_scale(0.1))
    assert rep.quadrature_error <= 1e-6 * rep.q_value


def test_form_is_twice_polar_quadratic_at_small_t(exp_kernel):
    fam = exp_kernel.at_scale(0.2)
    f = expand(np.cos(2 * circle_grid(64)), 2, 4).scaled(1 / math.sqrt(math.pi))
    t = 1e-3
    quadratic = polar_terms(shape_from_field(f, t), fam)[0]
    assert_allclose(quadratic / t**2, 0.5 * nonlocal_form_Q(f, fam).q_value, rtol=5e-3)


def test_non_lipschitz_warning(exp_kernel):
    f = SphericalField.from_entries(2, 4, [(4, 0, 1e7)])
    with pytest.warns(NonLipschitzWarning):
        nonlocal_form_Q(f, exp_kernel.at_scale(0.1))


def test_constraint_examples():
    th = circle_grid(64)
    rep = constraint_checks(expand(np.cos(3 * th), 2, 4), 0.02)
    assert rep.applicable and rep.gap_holds
    assert_allclose(rep.gap, 3 * math.pi, rtol=1e-13)
    rep = constraint_checks(expand(np.cos(th), 2, 4), 0.02)
    assert not rep.applicable
    assert_allclose(rep.gap, -math.pi, rtol=1e-13)
    f3 = SphericalField.from_entries(3, 2, [(2, 0, 1.0)])
    assert_allclose(constraint_checks(f3, 0.02).gap, 0.5, rtol=1e-14)


def test_deficit_zero_field(exp_kernel):
    rep = deficit_checks(0.02, SphericalField.zeros(2, 4), exp_kernel.at_scale(0.05), 0.5)
    assert rep.local_deficit == 0.0 and rep.f_deficit == 0.0
    assert rep.bracket_holds and rep.prop_holds


def test_psi_constant(exp_kernel):
    res = psi_constant_check(0.5, 0.02, exp_kernel.at_scale(0.1))
    assert res["relative"] <= 1e-4


@pytest.mark.parametrize("family", ["exponential", "gaussian", "compact_bump",
                                    "truncated_riesz", "bessel"])
def test_q_hat_shrinks_with_eps(family):
    from dropshape.kernels import build_kernel
    base = build_kernel(family)
    f = expand(np.cos(3 * circle_grid(64)), 2, 4)
    q = [nonlocal_form_Q(f, base.at_scale(e)).q_eta_hat for e in (0.2, 0.1, 0.05)]
    assert np.all(np.diff(np.abs(q)) < 0)
    assert abs(q[-1]) <= 0.1
