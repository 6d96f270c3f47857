import math

import numpy as np
from numpy.testing import assert_allclose

from dropshape.onedim import (
    IntervalUnion, crit1_batched, crit1_closed_form, per1_bruteforce, per1_closed_form,
    random_union, slice_grid, slice_star_shape, tail_integral_J,
)
from dropshape.shapes2d import from_fourier


def test_interval_union_normalizes():
    J = IntervalUnion.of([(2, 3), (0, 1), (0.5, 1.5), (4, 4)])
    assert list(J) == [(0, 1.5), (2, 3)]
    assert J.local_perimeter == 4


def test_tail_integral(exp_kernel):
    fam = exp_kernel.at_scale(1.0)
    assert_allclose(tail_integral_J(fam, 0.0), 0.5, rtol=1e-12)
    assert_allclose(tail_integral_J(fam, 1.0), 0.75 / math.e, rtol=1e-12)
    assert tail_integral_J(fam, 50.0) <= 1e-12


def test_crit1_values(exp_kernel):
    fam = exp_kernel.at_scale(1.0)
    assert_allclose(crit1_closed_form(IntervalUnion.of([(0, 1)]), fam), 3 / math.e, rtol=1e-10)
    assert_allclose(crit1_closed_form(IntervalUnion.of([(0, 2)]), fam), 4 * math.exp(-2), rtol=1e-10)
    for J in ([], [(-math.inf, 0)], [(0, math.inf)], [(-math.inf, math.inf)]):
        assert crit1_closed_form(IntervalUnion.of(J), fam) == 0.0
    assert_allclose(per1_closed_form(IntervalUnion.of([(0, 1)]), fam), 2 - 3 / math.e, rtol=1e-10)


def test_bruteforce_matches_closed_form(exp_kernel):
    fam = exp_kernel.at_scale(0.7)
    J = IntervalUnion.of([(0, 1), (2, 3)])
    assert_allclose(per1_bruteforce(J, fam), per1_closed_form(J, fam), atol=1e-8)
    assert per1_bruteforce(IntervalUnion.of([]), fam) == 0.0


def test_convexification_decreases_1d(exp_kernel):
    fam = exp_kernel.at_scale(0.5)
    rng = np.random.default_rng(4)
    for _ in range(20):
        J = random_union(rng)
        assert crit1_closed_form(J.hull(), fam) <= crit1_closed_form(J, fam) + 1e-14


def test_batched_agrees_with_scalar(gauss_kernel):
    fam = gauss_kernel.at_scale(0.3)
    rng = np.random.default_rng(5)
    unions = [random_union(rng) for _ in range(8)]
    k = max(len(J) for J in unions)
    starts = np.full((8, k), np.nan)
    ends = np.full((8, k), np.nan)
    for i, J in enumerate(unions):
        for j, (a, b) in enumerate(J):
            starts[i, j], ends[i, j] = a, b
    crit, count = crit1_batched(starts, ends, fam)
    assert_allclose(crit, [crit1_closed_form(J, fam) for J in unions], rtol=1e-12, atol=1e-15)
    assert_allclose(2 * count, [J.local_perimeter for J in unions])


def test_disk_chords():
    disk = from_fourier((0.0, 0.0), 1.0, [])
    assert_allclose(list(slice_star_shape(disk, (1.0, 0.0), 0.0))[0], (-1, 1), atol=1e-10)
    assert_allclose(list(slice_star_shape(disk, (1.0, 0.0), 0.6))[0], (-0.8, 0.8), atol=1e-10)


def test_concave_slice_has_two_pieces():
    tre = from_fourier((0.0, 0.0), 1.0, [(3, 0.3, 0.0)])
    J = slice_star_shape(tre, (0.0, 1.0), 0.8)  # vertical line x = -0.8 through both left lobes
    assert len(J) == 2


def test_convex_and_general_paths_agree():
    E = from_fourier((0.2, 0.1), 1.0, [(2, 0.04, 0.01), (3, 0.0, 0.02)])
    a = slice_grid(E, 16, 32, convex=True)
    b = slice_grid(E, 16, 32, convex=False)
    assert_allclose(a.starts[..., 0], b.starts[..., 0], atol=1e-12)
    assert_allclose(a.ends[..., 0], b.ends[..., 0], atol=1e-12)
