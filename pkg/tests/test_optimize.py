import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropshape.optimize import (
    OptimizerConfig, convexification_experiment, disk_distance, minimize, sweep,
    write_sweep_csv,
)
from dropshape.shapes2d import from_fourier, translate

DISK = from_fourier((0.0, 0.0), 1.0, [])


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(K=1)
    with pytest.raises(ValueError):
        OptimizerConfig(step=0.0)


def test_disk_is_stationary(exp_kernel):
    cfg = OptimizerConfig(K=4)
    rep = minimize(DISK, exp_kernel.at_scale(0.2), 0.5, cfg)
    assert rep.converged and rep.iterations == 0
    assert rep.initial_grad_max <= 10 * cfg.fd_step * 2 * math.pi
    assert_allclose(rep.f_final, rep.f_disk, rtol=1e-12)


def test_descent_and_translation_invariance(exp_kernel):
    cfg = OptimizerConfig(K=4, max_iters=30)
    fam = exp_kernel.at_scale(0.2)
    init = from_fourier((0.0, 0.0), 1.0, [(2, 0.06, 0.0), (3, 0.0, 0.03)])
    a = minimize(init, fam, 0.5, cfg)
    b = minimize(translate(init, (0.7, -0.2)), fam, 0.5, cfg)
    assert np.all(np.diff(a.f_trace) <= 0)
    assert a.converged and a.u_h1 <= 1e-3
    assert_allclose(a.f_final, b.f_final, atol=1e-6)


def test_disk_distance():
    h1, delta = disk_distance(from_fourier((0, 0), 1.0, [(2, 0.01, 0.0)]))
    assert_allclose(h1, math.sqrt(5 * math.pi) * 0.01, rtol=1e-3)
    assert_allclose(delta, 0.01, rtol=1e-2)


def test_convex_input_is_fixed_point(exp_kernel):
    row = convexification_experiment([from_fourier((0, 0), 1.0, [(2, 0.05, 0.0)])],
                                     exp_kernel.at_scale(0.1), 0.5)[0]
    assert row.convex_input
    assert_allclose([row.critical_margin, row.f_margin], 0.0, atol=1e-12)


def test_sweep_csv_is_deterministic(tmp_path, exp_kernel):
    cfg = OptimizerConfig(K=3, max_iters=3)
    inits = [from_fourier((0, 0), 1.0, [(2, 0.03, 0.0)])]
    paths = []
    for i in range(2):
        rows = sweep(exp_kernel, 0.5, [0.3, 0.2], inits, cfg)
        assert [r["eps"] for r in rows] == [0.2, 0.3]
        paths.append(tmp_path / f"s{i}.csv")
        write_sweep_csv(paths[-1], rows)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    header = paths[0].read_text().splitlines()[0]
    assert header == "eps,gamma,init_id,iters,f_final,f_disk_gap,u_h1,delta_hat,converged"
