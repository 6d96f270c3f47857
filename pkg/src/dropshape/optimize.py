"""Area-constrained minimization of ``F = P - gamma Per_eps`` over star shapes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import io
from ._parallel import pmap
from .nonlocal_perimeter import PreconditionError, per_slicing
from .onedim import slice_grid
from .shapes2d import (
    GeometryError, convex_hull_full, dilate, from_fourier, is_convex, measure, random_shape,
    recenter, scale_to_area,
)

SWEEP_COLUMNS = ["eps", "gamma", "init_id", "iters", "f_final", "f_disk_gap", "u_h1",
                 "delta_hat", "converged"]


@dataclass(frozen=True)
class OptimizerConfig:
    K: int = 8
    step: float = 1.0
    max_iters: int = 60
    grad_tol: float = 1e-6
    area_target: float = math.pi
    fd_step: float = 1e-5
    seed: int = 0
    search_directions: int = 128
    search_offsets: int = 256
    armijo: float = 1e-4
    threads: int | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class OptimizerReport:
    shape: object
    f_trace: list
    f_final: float
    f_disk: float
    u_h1: float
    delta_hat: float
    iterations: int
    converged: bool
    grad_norm: float
    initial_grad_max: float
    message: str = ""
    evaluations: int = 0

    @property
    def f_disk_gap(self):
        return self.f_final - self.f_disk

    def to_dict(self):
        return {
            "shape": self.shape.to_dict(), "f_trace": list(self.f_trace),
            "f_final": self.f_final, "f_disk": self.f_disk, "f_disk_gap": self.f_disk_gap,
            "u_h1": self.u_h1, "delta_hat": self.delta_hat, "iterations": self.iterations,
            "converged": self.converged, "grad_norm": self.grad_norm,
            "initial_grad_max": self.initial_grad_max, "message": self.message,
            "evaluations": self.evaluations,
        }


def _shape(x, cfg):
    K = cfg.K
    modes = [(k, x[2 * (k - 2)], x[2 * (k - 2) + 1]) for k in range(2, K + 1)]
    E = from_fourier((0.0, 0.0), 1.0, modes)
    return scale_to_area(E, cfg.area_target)


def _params(init, cfg):
    """Modes ``2..K`` of the recentered, area-normalized init, relative to ``r0``."""
    E = recenter(scale_to_area(init, cfg.area_target))
    x = np.zeros(2 * (cfg.K - 1))
    for k, a, b in E.modes:
        if 2 <= k <= cfg.K:
            x[2 * (k - 2)] = a / E.r0
            x[2 * (k - 2) + 1] = b / E.r0
    return x


def _preconditioner(cfg):
    k = np.repeat(np.arange(2, cfg.K + 1), 2)
    return np.pi * (k * k - 1.0)


def disk_distance(E):
    """``(||u||_{H^1}, delta_hat)`` for ``R = 1 + u`` about the barycenter of ``E``."""
    E = recenter(E)
    N = max(2048, 32 * E.max_mode)
    u = E.samples(N) - 1.0
    du = E.samples(N, 1)
    h1 = math.sqrt(2 * np.pi * float(np.mean(u * u + du * du)))
    return h1, max(1.0 - float(np.min(u + 1.0)), float(np.max(u + 1.0)) - 1.0)


class _Objective:
    def __init__(self, fam, gamma, cfg):
        self.fam, self.gamma, self.cfg = fam, gamma, cfg
        self.count = 0

    def __call__(self, x):
        self.count += 1
        try:
            E = _shape(x, self.cfg)
        except GeometryError:
            return math.inf
        grid = slice_grid(E, self.cfg.search_directions, self.cfg.search_offsets, n_samples=1024)
        per = per_slicing(E, self.fam, grid=grid)[0]
        return measure(E).local_perimeter - self.gamma * per

    def gradient(self, x):
        h = self.cfg.fd_step
        probes = []
        for i in range(x.size):
            for s in (h, -h):
                y = x.copy()
                y[i] += s
                probes.append(y)
        vals = np.array(pmap(self, probes, self.cfg.threads))
        return (vals[0::2] - vals[1::2]) / (2 * h)


def full_energy(E, fam, gamma):
    return measure(E).local_perimeter - gamma * per_slicing(E, fam)[0]


def minimize(init, fam, gamma, cfg=None):
    """Preconditioned Barzilai-Borwein descent with Armijo backtracking.

    Unknowns are the Fourier modes ``2..K``; mode 1 is pinned to remove
    translations and the mean radius is fixed by rescaling to the target
    area.  Gradients are central finite differences at the reduced slicing
    resolution; the reported ``f_final`` uses the full resolution.
    """
    cfg = cfg or OptimizerConfig()
    if not 0.0 < gamma < 1.0:
        raise PreconditionError("gamma must lie in (0, 1)")
    obj = _Objective(fam, gamma, cfg)
    W = _preconditioner(cfg)
    x = _params(init, cfg)
    fx = obj(x)
    if not math.isfinite(fx):
        raise GeometryError("initial shape is not admissible")
    g = obj.gradient(x)
    g0 = float(np.max(np.abs(g)))
    trace = [fx]
    alpha = cfg.step
    converged, message = False, "maximum iterations reached"
    it = 0
    for it in range(cfg.max_iters + 1):
        d = -g / W
        if np.max(np.abs(d)) <= cfg.grad_tol:
            converged, message = True, "preconditioned gradient below tolerance"
            break
        if it == cfg.max_iters:
            break
        slope = float(g @ d)
        a = alpha
        while True:
            xn = x + a * d
            fn = obj(xn)
            if fn <= fx + cfg.armijo * a * slope:
                break
            a *= 0.5
            if a < 1e-12:
                break
        if a < 1e-12:
            message = "line search failed"
            break
        gn = obj.gradient(xn)
        s, y = xn - x, gn - g
        sy = float(s @ y)
        alpha = float(s @ (W * s)) / sy if sy > 0 else 2.0 * a
        alpha = min(max(alpha, 1e-3 * cfg.step), 1e3 * cfg.step)
        x, fx, g = xn, fn, gn
        trace.append(fx)
    E = recenter(_shape(x, cfg))
    h1, delta = disk_distance(E)
    disk = from_fourier((0.0, 0.0), math.sqrt(cfg.area_target / np.pi), [])
    return OptimizerReport(
        E, trace, full_energy(E, fam, gamma), full_energy(disk, fam, gamma), h1, delta,
        it, converged, float(np.max(np.abs(g / W))), g0, message, obj.count,
    )


def random_inits(rng, count, K=8, amp=0.08):
    """Perturbed disks with modes ``2..K`` of size ``<= amp / k``."""
    return [random_shape(rng, K=K, amp=amp, kmin=2, power=1.0) for _ in range(count)]


def sweep(base_kernel, gamma, eps_grid, inits, cfg=None):
    """Minimize from every init at every ``eps``; rows sorted by ``eps``."""
    cfg = cfg or OptimizerConfig()
    rows = []
    for eps in sorted(float(e) for e in eps_grid):
        if not 0.0 < eps <= 1.0:
            raise PreconditionError("eps values must lie in (0, 1]")
        fam = base_kernel.at_scale(eps)
        for i, E in enumerate(inits):
            rep = minimize(E, fam, gamma, cfg)
            rows.append({"eps": eps, "gamma": float(gamma), "init_id": i,
                         "iters": rep.iterations, "f_final": rep.f_final,
                         "f_disk_gap": rep.f_disk_gap, "u_h1": rep.u_h1,
                         "delta_hat": rep.delta_hat, "converged": rep.converged})
    return rows


def write_sweep_csv(path, rows):
    io.write_csv(path, SWEEP_COLUMNS, rows)


@dataclass
class ConvexificationRow:
    convex_input: bool
    critical: float
    critical_hull: float
    critical_margin: float
    f_value: float
    f_scaled_hull: float
    f_margin: float
    hull_scale: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.critical_margin >= -1e-3 * 2 * np.pi and self.f_margin > 0

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "extra"}
        d["passed"] = self.passed
        return d


def convexification_experiment(shapes, fam, gamma):
    """Compare ``E`` with its convex hull at area ``pi``.

    Each row holds ``critical_margin = E(E) - E(co E)`` for the critical
    energy and ``f_margin = F(E) - F(lambda co E)`` where ``lambda`` brings
    the hull back to area ``pi``.  The hull perimeter and area are those of
    the exact hull polygon; its nonlocal perimeter uses the refit hull.
    """
    rows = []
    for E in shapes:
        E = scale_to_area(E, np.pi)
        P = measure(E).local_perimeter
        per = per_slicing(E, fam)[0]
        if is_convex(E):
            hull, P_hull, A_hull = E, P, measure(E).area
        else:
            res = convex_hull_full(E)
            hull, P_hull, A_hull = res.shape, res.perimeter, res.area
        per_hull = per_slicing(hull, fam)[0]
        lam = math.sqrt(np.pi / A_hull)
        per_scaled = per_slicing(dilate(hull, lam), fam)[0]
        crit, crit_h = P - per, P_hull - per_hull
        f_val = P - gamma * per
        f_h = lam * P_hull - gamma * per_scaled
        rows.append(ConvexificationRow(is_convex(E), crit, crit_h, crit - crit_h, f_val, f_h,
                                       f_val - f_h, lam))
    return rows


def scaling_decrease(E, fam, gamma, factors=(0.6, 0.8, 0.95)):
    """``F(tE) - F(E)`` for each factor ``t`` (negative means decrease)."""
    base = full_energy(E, fam, gamma)
    return {float(t): full_energy(dilate(E, t), fam, gamma) - base for t in factors}
