"""Acceptance suite: one PASS/FAIL line per criterion.

Lines are printed as each test finishes and repeated in the terminal
summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from dropshape.kernels import FAMILIES, build_kernel, moment, rho_first_moment, unnormalized_moment
from dropshape.nonlocal_perimeter import (
    covariogram, disk_perimeter, gamow_equivalence_check, p_tilde, per_area, per_polar,
    per_slicing, scaling_derivative_check,
)
from dropshape.onedim import (
    crit1_closed_form, per1_bruteforce, random_union, tail_integral_J,
)
from dropshape.optimize import (
    OptimizerConfig, convexification_experiment, minimize, random_inits, scaling_decrease,
)
from dropshape.shapes2d import (
    from_fourier, is_convex, measure, random_nonconvex_shape, random_shape,
)
from dropshape.spectral import (
    circle_grid, constraint_checks, deficit_checks, eigenvalue, expand, grid_l2_sq,
    nonlocal_form_Q, psi_constant_check, random_centered_case, random_field, synthesize,
)

RESULTS = []
TWO_PI = 2 * math.pi
DISK = from_fourier((0.0, 0.0), 1.0, [])
PEANUT = from_fourier((0.0, 0.0), 1.0, [(2, 0.1, 0.0)])


@pytest.fixture
def record(capsys):
    def _record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return _record


def test_criterion_01_kernel_normalization(record):
    start = time.perf_counter()
    worst_i1, worst_rho = 0.0, 0.0
    for name in FAMILIES:
        k = build_kernel(name)
        worst_i1 = max(worst_i1, abs(moment(k, 1) - math.pi / 2))
        for eps in (1.0, 0.1):
            worst_rho = max(worst_rho, abs(rho_first_moment(k.at_scale(eps)) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_i1 <= 1e-8 and worst_rho <= 1e-8 and elapsed < 5.0
    record(1, ok, f"max|I1 - pi/2| = {worst_i1:.2e}, max|rho moment - 1| = {worst_rho:.2e}, "
                  f"{elapsed:.1f} s")
    assert ok


def test_criterion_02_oned_oracle(record, exp_kernel):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    fam = exp_kernel.at_scale(1.0)
    worst = 0.0
    for _ in range(50):
        J = random_union(rng)
        brute = J.local_perimeter - per1_bruteforce(J, fam)
        worst = max(worst, abs(crit1_closed_form(J, fam) - brute))
    j1 = abs(4 * tail_integral_J(fam, 1.0) - 3 * math.exp(-1.0))
    j0 = abs(tail_integral_J(fam, 0.0) - 0.5)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and j1 <= 1e-10 and j0 <= 1e-10 and elapsed < 30.0
    record(2, ok, f"max oracle error = {worst:.2e}, |4J(1) - 3/e| = {j1:.1e}, "
                  f"|J(0) - 1/2| = {j0:.1e}, {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def agreement_table(exp_kernel, gauss_kernel):
    rng = np.random.default_rng(3)
    rows = []
    start = time.perf_counter()
    for i in range(20):
        E = random_shape(rng, K=8, amp=0.05, power=2.0)
        cov = covariogram(E)
        P = measure(E).local_perimeter
        for base in (exp_kernel, gauss_kernel):
            for eps in (0.5, 0.1, 0.05):
                fam = base.at_scale(eps)
                vals = (per_area(E, fam, cov=cov)[0], per_slicing(E, fam)[0],
                        per_polar(E, fam)[0])
                rows.append({"shape": i, "family": base.family_tag, "eps": eps, "P": P,
                             "values": vals})
    return rows, time.perf_counter() - start


def test_criterion_03_method_agreement(record, agreement_table):
    rows, elapsed = agreement_table
    worst = max((max(r["values"]) - min(r["values"])) / r["values"][1] for r in rows)
    ok = worst <= 1e-3 and elapsed < 600.0
    record(3, ok, f"{len(rows)} cases, max relative spread = {worst:.2e}, {elapsed:.0f} s")
    assert ok


def test_criterion_04_bounds(record, agreement_table, exp_kernel):
    rows, _ = agreement_table
    bounds_ok = all(0.0 <= v <= r["P"] for r in rows for v in r["values"])
    disk = [disk_perimeter(exp_kernel.at_scale(e)) for e in (0.4, 0.2, 0.1, 0.05)]
    gaps = [(TWO_PI - v) / TWO_PI for v in disk]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = bounds_ok and gaps[-1] < 0.1 and monotone
    record(4, ok, f"0 <= Per <= P on all {3 * len(rows)} evaluations: {bounds_ok}; disk gaps "
                  + ", ".join(f"{g:.4f}" for g in gaps))
    assert ok


def test_criterion_05_scaling_and_gamow(record, exp_kernel):
    worst_scaling = 0.0
    for E, eps in ((DISK, 0.2), (PEANUT, 0.1)):
        for row in scaling_derivative_check(E, exp_kernel.at_scale(eps), (0.8, 1.0, 1.2)):
            worst_scaling = max(worst_scaling, row["residual"] / abs(row["per"]))
    rng = np.random.default_rng(5)
    worst_gamow = 0.0
    cases = [(random_shape(rng, K=6, amp=0.08), eps, gamma)
             for eps, gamma in ((1.0, 0.5), (0.5, 0.3), (0.25, 0.9), (0.5, 0.7), (1.0, 0.2))]
    for E, eps, gamma in cases:
        res = gamow_equivalence_check(E, exp_kernel.at_scale(eps), gamma)
        worst_gamow = max(worst_gamow, res["relative"])
    ok = worst_scaling <= 1e-3 and worst_gamow <= 1e-5
    record(5, ok, f"max scaling residual / Per = {worst_scaling:.2e}, "
                  f"max Gamow relative residual = {worst_gamow:.2e}")
    assert ok


def _convex_near_ball(rng, count, amp=0.05):
    out = []
    while len(out) < count:
        E = random_shape(rng, K=6, amp=amp, kmin=2, power=2.0)
        R = E.samples(2048)
        if is_convex(E) and R.min() >= 0.95 and R.max() <= 1.05:
            out.append(E)
    return out


def test_criterion_06_p_tilde_bracket(record, exp_kernel):
    fam = exp_kernel.at_scale(0.05)
    ratios = []
    for E in _convex_near_ball(np.random.default_rng(6), 10):
        ratios.append(p_tilde(E, fam) / measure(E).local_perimeter)
    ok = all(0.8 <= r <= 1.0 for r in ratios)
    record(6, ok, f"P~/P in [{min(ratios):.4f}, {max(ratios):.4f}] on 10 convex shapes")
    assert ok


def test_criterion_07_convexification_and_scaling(record, exp_kernel):
    fam = exp_kernel.at_scale(0.05)
    rng = np.random.default_rng(7)
    shapes = [random_nonconvex_shape(rng) for _ in range(10)]
    rows = convexification_experiment(shapes, fam, 0.5)
    margins = [r.critical_margin for r in rows]
    worst_decrease = -math.inf
    for E in _convex_near_ball(rng, 10):
        worst_decrease = max(worst_decrease, max(scaling_decrease(E, fam, 0.5).values()))
    ok = min(margins) >= 0.0 and worst_decrease < 0.0
    record(7, ok, f"min crit(E) - crit(co E) = {min(margins):.3e} on 10 nonconvex shapes, "
                  f"max F(tE) - F(E) = {worst_decrease:.3e}")
    assert ok


def test_criterion_08_spectral(record, exp_kernel):
    rng = np.random.default_rng(8)
    parseval, gap_err, gap_min = 0.0, 0.0, math.inf
    for n in (2, 3):
        for _ in range(100):
            f = random_field(rng, L=8, n=n)
            u = synthesize(f)
            parseval = max(parseval, abs(grid_l2_sq(u, n) - f.l2_norm_sq) / f.l2_norm_sq)
            energy = f.degree_energy()
            exact = sum((0.5 * eigenvalue(k, n) - (n - 1) - 0.5) * energy[k]
                        for k in range(f.L + 1))
            gap = constraint_checks(f, 0.01).gap
            gap_err = max(gap_err, abs(gap - exact) / abs(exact))
            gap_min = min(gap_min, gap)
    f = expand(np.cos(3 * circle_grid(64)), 2, 4)
    eps_grid = (0.4, 0.2, 0.1, 0.05)
    bbm = [abs(nonlocal_form_Q(f, exp_kernel.at_scale(e)).q_value / (9 * math.pi) - 1)
           for e in eps_grid]
    monotone = all(b < a for a, b in zip(bbm, bbm[1:]))
    ok = parseval <= 1e-8 and gap_err <= 1e-12 and gap_min > 0 and bbm[-1] < 0.1 and monotone
    record(8, ok, f"Parseval {parseval:.1e}, gap vs coefficient formula {gap_err:.1e} "
                  f"(min gap {gap_min:.3f}), |Q/9pi - 1| = "
                  + ", ".join(f"{b:.4f}" for b in bbm))
    assert ok


def test_criterion_09_deficit(record, exp_kernel):
    fam = exp_kernel.at_scale(0.05)
    rng = np.random.default_rng(9)
    bracket, prop, t_max = 0, 0, 0.0
    for i in range(30):
        t, f, _ = random_centered_case(rng, t_max=0.02)
        rep = deficit_checks(t, f, fam, (0.3, 0.5, 0.7)[i % 3])
        bracket += rep.bracket_holds
        prop += rep.prop_holds
        t_max = max(t_max, t)
    psi = psi_constant_check(0.5, 0.02, fam)["relative"]
    ok = bracket == 30 and prop == 30 and t_max <= 0.02 and psi <= 1e-4
    record(9, ok, f"Fuglede bracket {bracket}/30, energy bound {prop}/30, max t = {t_max:.4f}, "
                  f"psi identity rel. error {psi:.1e}")
    assert ok


def test_criterion_10_disk_minimality(record, exp_kernel):
    start = time.perf_counter()
    fam = exp_kernel.at_scale(0.1)
    inits = random_inits(np.random.default_rng(10), 5)
    reports = [minimize(E, fam, 0.5, OptimizerConfig()) for E in inits]
    elapsed = time.perf_counter() - start
    h1 = max(r.u_h1 for r in reports)
    gap = min(r.f_disk_gap for r in reports)
    ok = h1 <= 1e-3 and gap >= -1e-6 and elapsed < 1200.0
    record(10, ok, f"max |u|_H1 = {h1:.2e}, min F(final) - F(disk) = {gap:.2e}, "
                   f"iterations {[r.iterations for r in reports]}, {elapsed:.0f} s")
    assert ok


def test_criterion_11_bessel_threshold(record):
    k = build_kernel("bessel", {"kappa": math.pi**2, "alpha": 1.0})
    value = 2 * 0.5 * unnormalized_moment(k, 1)
    rel = abs(value - math.pi) / math.pi
    ok = rel <= 0.01
    record(11, ok, f"2 gamma I1 = {value:.10f}, relative error {rel:.1e}")
    assert ok
