import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropshape.shapes2d import (
    GeometryError, convex_hull, convex_hull_full, dilate, from_fourier, is_convex, measure,
    nearly_spherical_decompose, random_shape, recenter, scale_about_origin, scale_to_area,
    shape_from_dict, translate,
)


def test_disk_measure():
    g = measure(from_fourier((0.3, -1.0), 2.0, []))
    assert_allclose(g.area, 4 * math.pi, rtol=1e-14)
    assert_allclose(g.local_perimeter, 4 * math.pi, rtol=1e-14)
    assert_allclose(g.barycenter, (0.3, -1.0), atol=1e-14)


def test_peanut_area():
    # |E| = pi (1 + a^2 / 2) for R = 1 + a cos 2t
    assert_allclose(measure(from_fourier((0, 0), 1.0, [(2, 0.1, 0.0)])).area, 1.005 * math.pi,
                    rtol=1e-14)


def test_invalid_shape():
    with pytest.raises(GeometryError):
        from_fourier((0, 0), 1.0, [(3, 1.2, 0.0)])
    with pytest.raises(GeometryError):
        shape_from_dict({"center": [0, 0]})


def test_empty_shape():
    E = from_fourier((0, 0), 0.0, [])
    assert E.is_empty


def test_scalings():
    E = random_shape(np.random.default_rng(1))
    assert_allclose(measure(scale_to_area(E, math.pi)).area, math.pi, rtol=1e-13)
    F = dilate(E, 1.3)
    assert F.center == E.center
    assert_allclose(measure(F).area, 1.69 * measure(E).area, rtol=1e-13)
    G = scale_about_origin(translate(E, (1.0, 0.0)), 2.0)
    assert_allclose(G.center, (2 * (E.center[0] + 1.0), 2 * E.center[1]))


def test_recenter_moves_barycenter():
    E = from_fourier((0, 0), 1.0, [(1, 0.05, 0.0), (2, 0.1, 0.03)])
    F = recenter(E)
    g = measure(F)
    assert np.hypot(*(np.array(g.barycenter) - F.center)) * g.area <= 1e-9
    assert_allclose(g.area, measure(E).area, rtol=1e-10)


def test_convexity_and_hull():
    assert is_convex(from_fourier((0, 0), 1.0, [(2, 0.05, 0.0)]))
    tre = from_fourier((0, 0), 1.0, [(3, 0.3, 0.0)])
    assert not is_convex(tre)
    res = convex_hull_full(tre)
    assert res.perimeter < measure(tre).local_perimeter
    assert res.area > measure(tre).area
    conv = from_fourier((0, 0), 1.0, [(2, 0.05, 0.0)])
    assert convex_hull(conv) is conv


def test_hull_is_idempotent():
    hull = convex_hull(from_fourier((0, 0), 1.0, [(3, 0.3, 0.0)]))
    again = convex_hull_full(hull)
    assert_allclose(again.perimeter, measure(hull).local_perimeter, rtol=1e-4)


def test_nearly_spherical():
    d = nearly_spherical_decompose(from_fourier((0, 0), 1.0, [(2, 0.02, 0.0)]))
    assert_allclose(d.t, 0.02, rtol=1e-12)
    assert_allclose(d.sup_norm, 1.0, rtol=1e-12)
    assert_allclose(d.lip_norm, 2.0, rtol=1e-10)
    assert not d.valid
