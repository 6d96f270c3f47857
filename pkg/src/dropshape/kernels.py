"""Radial interaction kernels, their normalization and derived 1D kernels.

A kernel is stored through its radial profile ``g`` with ``G(x) = g(|x|)``.
Every built kernel is rescaled so that its first moment

    I^1 = |S^{n-1}| * int_0^inf r^n g(r) dr

equals ``1 / K_{1,n}``, the value that makes the nonlocal perimeter of a
set approach its classical perimeter as the length scale shrinks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gammaln

from . import quadrature as quad

FAMILIES = ("exponential", "gaussian", "compact_bump", "truncated_riesz", "bessel")
DERIVED = ("G_eps", "eta_eps", "rho_eps", "k_eps")

_BESSEL_NODES = 200


class KernelError(ValueError):
    """Invalid kernel parameters or a kernel violating the standing hypotheses."""


class KernelNumericError(RuntimeError):
    """A kernel quantity could not be computed to the requested accuracy."""


class DivergentMomentWarning(RuntimeWarning):
    pass


def k1n_constant(n):
    """Return ``K_{1,n} = Gamma(n/2) / (sqrt(pi) Gamma((n+1)/2))``."""
    if n < 1:
        raise KernelError("K_{1,n} needs n >= 1")
    return math.exp(math.lgamma(n / 2) - math.lgamma((n + 1) / 2)) / math.sqrt(math.pi)


def sphere_area(n):
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n):
    """Volume of the unit ball in R^n (``omega_n``)."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


# --------------------------------------------------------------------------
# raw profiles


def _exponential(params, n):
    ell = float(params.get("length", 1.0))
    if not ell > 0:
        raise KernelError("exponential length must be positive")

    def g(r):
        return np.exp(-r / ell)

    def dg(r):
        return -np.exp(-r / ell) / ell

    return g, dg, math.inf, [ell]


def _gaussian(params, n):
    w = float(params.get("width", 1.0))
    if not w > 0:
        raise KernelError("gaussian width must be positive")

    def g(r):
        return np.exp(-(r / w) ** 2)

    def dg(r):
        return -2.0 * r / w**2 * np.exp(-(r / w) ** 2)

    return g, dg, math.inf, [w]


def _compact_bump(params, n):
    R = float(params.get("radius", 1.0))
    if not R > 0:
        raise KernelError("compact_bump radius must be positive")

    def g(r):
        q = np.minimum((np.asarray(r, dtype=float) / R) ** 2, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.exp(-1.0 / (1.0 - q))
        return np.where(q < 1.0, out, 0.0)

    def dg(r):
        r = np.asarray(r, dtype=float)
        q = np.minimum((r / R) ** 2, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = np.exp(-1.0 / (1.0 - q)) * (-2.0 * r / R**2) / (1.0 - q) ** 2
        return np.where(q < 1.0, out, 0.0)

    return g, dg, R, [0.5 * R, 0.9 * R]


def _truncated_riesz(params, n):
    alpha = float(params.get("alpha", 0.5))
    R = float(params.get("radius", 1.0))
    if not 0 < alpha < n:
        raise KernelError("truncated_riesz exponent alpha must lie in (0, n)")
    if not R > 0:
        raise KernelError("truncated_riesz radius must be positive")
    p = n - alpha
    r0, width = 0.9 * R, 0.1 * R

    def taper(r):
        s = np.clip((r - r0) / width, 0.0, 1.0)
        return 1.0 - 3.0 * s**2 + 2.0 * s**3, (-6.0 * s + 6.0 * s**2) / width

    def g(r):
        r = np.asarray(r, dtype=float)
        tau, _ = taper(r)
        with np.errstate(divide="ignore"):
            return np.where(r < R, r ** (-p) * tau, 0.0)

    def dg(r):
        r = np.asarray(r, dtype=float)
        tau, dtau = taper(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -p * r ** (-p - 1.0) * tau + r ** (-p) * dtau
        return np.where(r < R, out, 0.0)

    return g, dg, R, [r0]


def _bessel_log_range(a, p, drop=40.0):
    """Window in v = log s holding the mass of exp(-e^v - a e^-v + p v)."""
    a = np.asarray(a, dtype=float)
    s_star = 0.5 * (p + np.sqrt(p * p + 4.0 * a))
    v_star = np.log(np.maximum(s_star, 1e-300))

    def h(v):
        with np.errstate(over="ignore"):
            return -np.exp(v) - a * np.exp(-v) + p * v

    h_star = h(v_star)

    def edge(sign):
        lo = np.zeros_like(v_star)
        hi = np.full_like(v_star, 1.0)
        while True:  # expand until the drop is reached
            far = h(v_star + sign * hi) < h_star - drop
            if np.all(far):
                break
            hi = np.where(far, hi, 2.0 * hi)
            if np.max(hi) > 1e4:
                break
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = h(v_star + sign * mid) < h_star - drop
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        return v_star + sign * hi

    return edge(-1.0), edge(1.0)


def _bessel_integral(r, kappa, alpha, n, order, derivative=False):
    """Subordination integral for the Bessel potential, without prefactor."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a = r * r / (4.0 * kappa)
    p = 0.5 * (alpha - n) - (1.0 if derivative else 0.0)
    lo, hi = _bessel_log_range(a, p)
    x, w = quad.gauss_legendre(order)
    half = 0.5 * (hi - lo)
    v = 0.5 * (hi + lo)[:, None] + half[:, None] * x[None, :]
    with np.errstate(over="ignore"):
        vals = np.exp(-np.exp(v) - a[:, None] * np.exp(-v) + p * v)
    out = half * (vals @ w)
    if derivative:
        out = -r / (2.0 * kappa) * out
    return out


def _bessel(params, n):
    kappa = float(params.get("kappa", 1.0))
    alpha = float(params.get("alpha", 1.0))
    if not (kappa > 0 and alpha > 0):
        raise KernelError("bessel kernel needs kappa > 0 and alpha > 0")
    pref = math.exp(-0.5 * n * math.log(4.0 * math.pi * kappa) - math.lgamma(alpha / 2))

    def g(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            out[pos] = pref * _bessel_integral(flat[pos], kappa, alpha, n, _BESSEL_NODES)
        out[~pos] = np.inf if alpha <= n else out[~pos]
        return out.reshape(r.shape)

    def dg(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            out[pos] = pref * _bessel_integral(flat[pos], kappa, alpha, n, _BESSEL_NODES, True)
        return out.reshape(r.shape)

    # Self-check against a doubled rule before the kernel is used anywhere.
    probe = np.geomspace(1e-6, 60.0 * math.sqrt(kappa), 25)
    ref = _bessel_integral(probe, kappa, alpha, n, 2 * _BESSEL_NODES)
    got = _bessel_integral(probe, kappa, alpha, n, _BESSEL_NODES)
    live = ref > 1e-250
    rel = np.max(np.abs(got[live] - ref[live]) / ref[live]) if np.any(live) else 0.0
    if rel > 1e-10:
        raise KernelNumericError(
            f"bessel subordination quadrature not converged: rel. diff {rel:.2e} "
            f"between {_BESSEL_NODES} and {2 * _BESSEL_NODES} nodes "
            f"(kappa={kappa}, alpha={alpha})")
    return g, dg, math.inf, [math.sqrt(kappa)]


_BUILDERS = {
    "exponential": _exponential,
    "gaussian": _gaussian,
    "compact_bump": _compact_bump,
    "truncated_riesz": _truncated_riesz,
    "bessel": _bessel,
}


def _cutoff(g, n, support, hints, level=1e-19):
    """Radius beyond which ``r^(n+2) g(r)`` stays below ``level``.

    The largest value of the weighted profile sets the scale.
    """
    if math.isfinite(support):
        return support
    r = np.geomspace(1e-3, 1e6, 1200) * max(hints)
    vals = r ** (n + 2) * g(r)
    big = np.nonzero(vals > level * np.max(vals))[0]
    if big.size == 0:
        return float(r[0])
    return float(r[min(big[-1] + 1, r.size - 1)])


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialKernel:
    """Normalized radial kernel ``G(x) = scale_factor * g_raw(|x|)``."""

    dimension: int
    family_tag: str
    params: dict = field(repr=True)
    scale_factor: float
    support: float
    cutoff: float
    _g: object = field(repr=False)
    _dg: object = field(repr=False)
    _hints: tuple = field(repr=False, default=())

    def profile(self, r):
        """Normalized radial profile g(r)."""
        return self.scale_factor * self._g(np.asarray(r, dtype=float))

    def profile_derivative(self, r):
        return self.scale_factor * self._dg(np.asarray(r, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.linalg.norm(x, axis=-1))

    @property
    def breakpoints(self):
        pts = [h for h in self._hints if 0 < h < self.cutoff]
        return sorted(set(pts + [self.cutoff]))

    def spec(self):
        return {"family": self.family_tag, "params": dict(self.params), "n": self.dimension}

    def at_scale(self, epsilon):
        return KernelFamily(self, float(epsilon))

    # -- cached 1D tables in the unit-scale variable ------------------------

    def _table_grid(self):
        d_max = self.cutoff
        h = max(0.01 * min(self._hints + (d_max,)), d_max / 5000.0)
        first = min(0.05 * min(self._hints + (d_max,)), d_max / 20)
        near = np.geomspace(1e-12 * first, first, 90)
        far = np.arange(first, d_max, h)
        edges = np.unique(np.concatenate([[0.0], near, far, self.breakpoints, [d_max]]))
        return edges[edges <= d_max]

    @cached_property
    def slice_table(self):
        """Hermite spline of ``J_1(d) = int_d^inf (t - d) rho_1(t) dt``."""
        n = self.dimension
        om = ball_volume(n - 1)
        edges = self._table_grid()

        def rho(t):
            return om * t ** (n - 1) * self.profile(t)

        m0 = quad.adaptive(rho, edges, rtol=1e-13, atol=1e-300).panels
        m1 = quad.adaptive(lambda t: t * rho(t), edges, rtol=1e-13, atol=1e-300).panels
        M0 = np.concatenate([np.cumsum(m0[::-1])[::-1], [0.0]])
        M1 = np.concatenate([np.cumsum(m1[::-1])[::-1], [0.0]])
        J = np.maximum(M1 - edges * M0, 0.0)
        return CubicHermiteSpline(edges, J, -M0, extrapolate=False), float(edges[-1]), M0

    @cached_property
    def moment_table(self):
        """Hermite spline of ``Phi_1(l) = int_0^l r^n g(r) dr``."""
        n = self.dimension
        edges = self._table_grid()

        def f(r):
            return r**n * self.profile(r)

        pieces = quad.adaptive(f, edges, rtol=1e-13, atol=1e-300).panels
        Phi = np.concatenate([[0.0], np.cumsum(pieces)])
        with np.errstate(invalid="ignore"):
            slope = np.nan_to_num(f(edges), nan=0.0, posinf=0.0)
        spline = CubicHermiteSpline(edges, Phi, slope, extrapolate=False)
        return spline, float(edges[-1]), float(Phi[-1])

    @cached_property
    def l1_norm(self):
        """``||G||_{L^1}``; infinite when the profile is not integrable."""
        n = self.dimension
        S = sphere_area(n)
        f = lambda r: r ** (n - 1) * self.profile(r)  # noqa: E731
        edges = [0.0] + self.breakpoints
        head = quad.adaptive(f, edges, rtol=1e-13, atol=1e-300).value
        if math.isfinite(self.support):
            return S * head
        tail, ok = quad.integrate_to_infinity(f, self.cutoff, scale=self.cutoff, rtol=1e-14)
        return S * (head + tail) if ok else math.inf


@dataclass(frozen=True)
class KernelFamily:
    """A normalized kernel together with its length scale ``epsilon``."""

    base: RadialKernel
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise KernelError("epsilon must be positive")

    @property
    def n(self):
        return self.base.dimension

    def g(self, r):
        e = self.epsilon
        return e ** (-(self.n + 1)) * self.base.profile(np.asarray(r, dtype=float) / e)

    def dg(self, r):
        e = self.epsilon
        return e ** (-(self.n + 2)) * self.base.profile_derivative(np.asarray(r, dtype=float) / e)

    def G(self, x):
        return self.g(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))

    def eta(self, r):
        e, n = self.epsilon, self.n
        s = np.asarray(r, dtype=float) / e
        return e ** (-(n - 1)) * 2.0 * s * s * self.base.profile(s)

    def rho(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        return ball_volume(self.n - 1) * r ** (self.n - 1) * self.g(r)

    def k(self, r):
        e, n = self.epsilon, self.n
        s = np.asarray(r, dtype=float) / e
        return e ** (-(n + 1)) * s * np.abs(self.base.profile_derivative(s))

    def slice_tail(self, d):
        """Table-based ``J_eps(d)``; exact scale law ``J_eps(d) = J_1(d / eps)``."""
        spline, d_max, _ = self.base.slice_table
        s = np.asarray(d, dtype=float) / self.epsilon
        out = np.zeros(np.shape(s))
        inside = s < d_max
        if np.ndim(s) == 0:
            return float(spline(max(float(s), 0.0))) if inside else 0.0
        out[inside] = spline(np.maximum(s[inside], 0.0))
        return out

    def radial_moment(self, ell):
        """``Phi_eps(l) = int_0^l r^n g_eps(r) dr`` (equal to ``Phi_1(l/eps)``)."""
        spline, d_max, full = self.base.moment_table
        s = np.asarray(ell, dtype=float) / self.epsilon
        return np.where(s < d_max, spline(np.clip(s, 0.0, d_max)), full)

    @property
    def l1_norm(self):
        return self.base.l1_norm / self.epsilon


# --------------------------------------------------------------------------


def build_kernel(family_tag, params=None, n=2):
    """Construct a normalized radial kernel.

    Parameters
    ----------
    family_tag : str
        One of ``exponential``, ``gaussian``, ``compact_bump``,
        ``truncated_riesz`` or ``bessel``.
    params : dict, optional
        Family parameters (``length``, ``width``, ``radius``, ``alpha``,
        ``kappa``).  Missing keys take unit defaults, ``alpha`` defaults to 1
        for Bessel kernels and to 0.5 for truncated Riesz kernels.
    n : int
        Ambient dimension, at least 2.

    Returns
    -------
    RadialKernel
        Kernel scaled so that its first moment equals ``1 / K_{1,n}``.
    """
    if family_tag not in _BUILDERS:
        raise KernelError(f"unknown kernel family {family_tag!r}")
    if int(n) != n or n < 2:
        raise KernelError("dimension must be an integer >= 2")
    n = int(n)
    params = dict(params or {})
    g, dg, support, hints = _BUILDERS[family_tag](params, n)
    cut = _cutoff(g, n, support, hints)
    S = sphere_area(n)

    def f(r):
        return r**n * g(r)

    edges = sorted({0.0, cut, *[h for h in hints if 0 < h < cut]})
    head = quad.adaptive(f, edges, rtol=1e-13, atol=1e-300).value
    tail, ok = (0.0, True)
    if not math.isfinite(support):
        tail, ok = quad.integrate_to_infinity(f, cut, scale=cut, rtol=1e-14)
    raw = S * (head + tail)
    if not ok or not math.isfinite(raw) or raw <= 0:
        raise KernelError(f"{family_tag} kernel has no finite positive first moment")
    scale = (1.0 / k1n_constant(n)) / raw
    return RadialKernel(n, family_tag, params, scale, support, cut, g, dg, tuple(hints))


def moment(kernel, k, rtol=1e-10):
    """``I^k = |S^{n-1}| int_0^inf r^(n-1+k) |d^(k-1) g / dr^(k-1)| dr``.

    Uses fresh adaptive quadrature (not the cached tables).  A tail whose
    partial sums over doubling panels are not Cauchy returns ``inf`` and
    emits :class:`DivergentMomentWarning`.
    """
    if k not in (1, 2):
        raise KernelError("moment order must be 1 or 2")
    n = kernel.dimension
    prof = kernel.profile if k == 1 else kernel.profile_derivative

    def f(r):
        return r ** (n - 1 + k) * np.abs(prof(r))

    edges = [0.0] + kernel.breakpoints
    head = quad.adaptive(f, edges, rtol=rtol * 1e-2, atol=1e-300).value
    tail, ok = 0.0, True
    if not math.isfinite(kernel.support):
        tail, ok = quad.integrate_to_infinity(f, kernel.cutoff, scale=kernel.cutoff,
                                              rtol=rtol * 1e-2)
    if not ok:
        warnings.warn(f"moment I^{k} appears divergent", DivergentMomentWarning, stacklevel=2)
        return math.inf
    return sphere_area(n) * (head + tail)


def unnormalized_moment(kernel, k=1, rtol=1e-10):
    """Moment of the raw profile before the normalizing scale was applied."""
    return moment(kernel, k, rtol) / kernel.scale_factor


def derived_kernel(fam, which, r):
    """Evaluate ``G_eps``, ``eta_eps``, ``rho_eps`` or ``k_eps`` at radius ``r > 0``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise KernelError("derived kernels are evaluated at r > 0")
    funcs = {"G_eps": fam.g, "eta_eps": fam.eta, "rho_eps": fam.rho, "k_eps": fam.k}
    if which not in funcs:
        raise KernelError(f"unknown derived kernel {which!r}")
    out = funcs[which](r_arr)
    return float(out) if np.ndim(out) == 0 else out


def rho_first_moment(fam, rtol=1e-12):
    """``int_R |t| rho_eps(t) dt`` by direct quadrature of the scaled profile."""
    e = fam.epsilon
    base = fam.base
    edges = [0.0] + [e * b for b in base.breakpoints]
    val = quad.adaptive(lambda t: 2.0 * t * fam.rho(t), edges, rtol=rtol, atol=1e-300).value
    if math.isfinite(base.support):
        return val
    tail, _ = quad.integrate_to_infinity(lambda t: 2.0 * t * fam.rho(t), e * base.cutoff,
                                         scale=e * base.cutoff, rtol=rtol)
    return val + tail


def slice_tail_exact(fam, d, rtol=1e-12):
    """``J_eps(d) = int_d^inf (t - d) rho_eps(t) dt`` by adaptive tail quadrature."""
    d = float(d)
    if d < 0:
        raise KernelError("tail integral needs d >= 0")
    e = fam.epsilon
    base = fam.base

    def f(t):
        return (t - d) * fam.rho(t)

    stop = e * base.cutoff
    if d >= stop:
        if math.isfinite(base.support):
            return 0.0
        val, _ = quad.integrate_to_infinity(f, d, scale=max(d, e), rtol=rtol)
        return val
    edges = sorted({d, stop, *[e * b for b in base.breakpoints if d < e * b < stop]})
    val = quad.adaptive(f, edges, rtol=rtol, atol=1e-300).value
    if not math.isfinite(base.support):
        tail, _ = quad.integrate_to_infinity(f, stop, scale=stop, rtol=rtol)
        val += tail
    return val


@dataclass
class HypothesisReport:
    family: str
    n: int
    h1_nonnegative: bool
    h2_first_moment: float
    h2_target: float
    h2_ok: bool
    h3_second_moment: float
    h3_tail_slope: float | None
    h3_ok: bool
    tcond_sup: list
    tcond_ok: bool
    cutoff: float

    @property
    def all_ok(self):
        return self.h1_nonnegative and self.h2_ok and self.h3_ok and self.tcond_ok

    def to_dict(self):
        d = dict(self.__dict__)
        d["all_ok"] = self.all_ok
        return d


TCOND_EPS = (0.2, 0.1, 0.05, 0.025)


def check_hypotheses(kernel, window=(0.5, 2.0), eps_grid=TCOND_EPS):
    """Sampled checks of nonnegativity, normalization and decay of a kernel."""
    n = kernel.dimension
    r = np.geomspace(1e-6, max(64.0, 4 * kernel.cutoff), 4000)
    h1 = bool(np.all(kernel.profile(r) >= 0))
    target = 1.0 / k1n_constant(n)
    i1 = moment(kernel, 1)
    i2 = moment(kernel, 2)

    # (H3) tail: fit log|g'| against log r on [8, 64]; underflowed tails pass.
    rt = np.geomspace(8.0, 64.0, 64)
    dg = np.abs(kernel.profile_derivative(rt))
    live = dg > 1e-280
    slope = None
    if np.count_nonzero(live) >= 8:
        slope = float(np.polyfit(np.log(rt[live]), np.log(dg[live]), 1)[0])
        tail_ok = slope <= -(n + 1) + 0.1
    else:
        tail_ok = True
    h3 = bool(math.isfinite(i2) and tail_ok)

    sups = []
    grid = np.linspace(window[0], window[1], 400)
    for e in eps_grid:
        sups.append(float(np.max(KernelFamily(kernel, e).eta(grid))))
    tcond = all(b <= a for a, b in zip(sups, sups[1:])) and sups[-1] <= max(sups[0], 1e-300)
    return HypothesisReport(
        family=kernel.family_tag, n=n, h1_nonnegative=h1,
        h2_first_moment=i1, h2_target=target,
        h2_ok=bool(abs(i1 - target) <= 1e-8 * target),
        h3_second_moment=i2, h3_tail_slope=slope, h3_ok=h3,
        tcond_sup=sups, tcond_ok=bool(tcond), cutoff=kernel.cutoff,
    )


def kernel_from_spec(spec):
    """Build a kernel from ``{"family": ..., "params": {...}, "n": ...}``."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise KernelError("kernel spec needs a 'family' entry")
    return build_kernel(spec["family"], spec.get("params") or {}, int(spec.get("n", 2)))


def _gamma_ratio(x, y):
    return math.exp(gammaln(x) - gammaln(y))


def bessel_first_moment_exact(kappa, alpha, n=2):
    """Closed-form first moment of the unnormalized Bessel potential."""
    S = sphere_area(n)
    return (S * 0.5 * 4.0 ** ((n + 1) / 2) / (4.0 * math.pi) ** (n / 2)
            * math.sqrt(kappa) * math.gamma((n + 1) / 2)
            * _gamma_ratio((alpha + 1) / 2, alpha / 2))


def bessel_critical_kappa(alpha):
    """``kappa`` at which the planar Bessel first moment equals pi."""
    return math.pi * _gamma_ratio(alpha / 2, (alpha + 1) / 2) ** 2
