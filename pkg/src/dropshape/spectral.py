"""Spherical-harmonic fields, the nonlocal quadratic form and deficit checks.

Fields on the circle (``n = 2``) use the orthonormal basis
``1/sqrt(2 pi)``, ``cos(k t)/sqrt(pi)``, ``sin(k t)/sqrt(pi)``; fields on
the sphere (``n = 3``) use real orthonormal spherical harmonics normalized
so that ``Y_1 = x_i / sqrt(|B_1|)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from . import quadrature as quad
from .kernels import ball_volume, sphere_area
from .nonlocal_perimeter import PreconditionError, disk_perimeter, per_slicing, polar_terms
from .shapes2d import from_fourier, measure, recenter, scale_to_area

LIPSCHITZ_LIMIT = 1e6


class AliasingError(ValueError):
    """The sampling grid cannot resolve the requested degree."""


class NonLipschitzWarning(RuntimeWarning):
    pass


def multiplicity(k, n):
    if k == 0:
        return 1
    return 2 if n == 2 else 2 * k + 1


def eigenvalue(k, n):
    """Laplace-Beltrami eigenvalue ``l_k = k (k + n - 2)``."""
    return k * (k + n - 2)


@dataclass(frozen=True)
class SphericalField:
    """Coefficients ``a_k^i`` for ``k <= L``, stored degree by degree.

    ``coeffs[k]`` has length ``multiplicity(k, n)``.  For ``n = 2`` the two
    entries are the cosine and sine coefficients; for ``n = 3`` entry ``i``
    is the order ``m = i - k``.
    """

    n: int
    L: int
    coeffs: tuple

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("only n = 2 and n = 3 are supported")
        if len(self.coeffs) != self.L + 1:
            raise ValueError("need one coefficient block per degree")
        for k, c in enumerate(self.coeffs):
            if len(c) != multiplicity(k, self.n):
                raise ValueError(f"degree {k} needs {multiplicity(k, self.n)} coefficients")

    @classmethod
    def zeros(cls, n, L):
        return cls(n, L, tuple(np.zeros(multiplicity(k, n)) for k in range(L + 1)))

    @classmethod
    def from_entries(cls, n, L, entries):
        """Build from ``[(k, i, a), ...]`` triples (the JSON layout)."""
        blocks = [np.zeros(multiplicity(k, n)) for k in range(L + 1)]
        for k, i, a in entries:
            k, i = int(k), int(i)
            if not 0 <= k <= L or not 0 <= i < multiplicity(k, n):
                raise ValueError(f"coefficient index ({k}, {i}) out of range")
            blocks[k][i] = float(a)
        return cls(n, L, tuple(blocks))

    def entries(self):
        return [(k, i, float(a)) for k, c in enumerate(self.coeffs) for i, a in enumerate(c)]

    def to_dict(self):
        return {"n": self.n, "L": self.L, "coeffs": [list(e) for e in self.entries()]}

    def degree_energy(self):
        """``sum_i (a_k^i)^2`` for each degree."""
        return np.array([float(np.dot(c, c)) for c in self.coeffs])

    @property
    def l2_norm_sq(self):
        return float(self.degree_energy().sum())

    @property
    def grad_norm_sq(self):
        lk = np.array([eigenvalue(k, self.n) for k in range(self.L + 1)])
        return float(np.dot(lk, self.degree_energy()))

    def without_low_modes(self):
        blocks = list(self.coeffs)
        for k in range(min(2, self.L + 1)):
            blocks[k] = np.zeros_like(blocks[k])
        return SphericalField(self.n, self.L, tuple(blocks))

    def scaled(self, c):
        return SphericalField(self.n, self.L, tuple(c * b for b in self.coeffs))


# --------------------------------------------------------------------------
# grids and transforms


def circle_grid(N):
    return 2 * np.pi * np.arange(N) / N


def sphere_grid(n_lat, n_lon):
    """Gauss-Legendre nodes in ``cos(polar)`` times a uniform azimuth grid."""
    x, w = np.polynomial.legendre.leggauss(n_lat)
    polar = np.arccos(x)
    azim = 2 * np.pi * np.arange(n_lon) / n_lon
    weights = np.outer(w, np.full(n_lon, 2 * np.pi / n_lon))
    return polar, azim, weights


def _real_sh(k, polar, azim):
    """Real harmonics of degree ``k`` on a grid, shape ``(2k + 1, n_lat, n_lon)``."""
    P, A = np.meshgrid(polar, azim, indexing="ij")
    out = np.empty((2 * k + 1,) + P.shape)
    for m in range(-k, k + 1):
        Y = sph_harm_y(k, abs(m), P, A)
        if m == 0:
            out[m + k] = Y.real
        elif m > 0:
            out[m + k] = math.sqrt(2) * (-1) ** m * Y.real
        else:
            out[m + k] = math.sqrt(2) * (-1) ** m * Y.imag
    return out


def expand(samples, n, L):
    """Project samples onto degrees ``<= L``.

    ``n = 2``: ``samples`` on :func:`circle_grid` with at least ``8 L``
    points.  ``n = 3``: a ``(n_lat, n_lon)`` array on :func:`sphere_grid`
    with ``n_lat >= 2L + 2`` and ``n_lon >= 4L + 4``.
    """
    u = np.asarray(samples, dtype=float)
    if n == 2:
        N = u.size
        if N < max(8 * L, 1):
            raise AliasingError(f"{N} samples cannot resolve degree {L} (need {8 * L})")
        X = np.fft.rfft(u) / N
        blocks = [np.array([X[0].real * math.sqrt(2 * np.pi)])]
        for k in range(1, L + 1):
            blocks.append(math.sqrt(np.pi) * np.array([2 * X[k].real, -2 * X[k].imag]))
        return SphericalField(2, L, tuple(blocks))
    if n == 3:
        n_lat, n_lon = u.shape
        if n_lat < 2 * L + 2 or n_lon < 4 * L + 4:
            raise AliasingError(
                f"grid {n_lat}x{n_lon} cannot resolve degree {L} (need {2 * L + 2}x{4 * L + 4})")
        polar, azim, w = sphere_grid(n_lat, n_lon)
        blocks = [np.einsum("mij,ij->m", _real_sh(k, polar, azim), u * w) for k in range(L + 1)]
        return SphericalField(3, L, tuple(blocks))
    raise ValueError("only n = 2 and n = 3 are supported")


def synthesize(field, grid=None):
    """Evaluate the field on its default grid (or the given grid size)."""
    L = field.L
    if field.n == 2:
        N = grid or max(8 * L, 16)
        spec = np.zeros(N // 2 + 1, dtype=complex)
        spec[0] = N * field.coeffs[0][0] / math.sqrt(2 * np.pi)
        for k in range(1, L + 1):
            a, b = field.coeffs[k]
            spec[k] = 0.5 * N * (a - 1j * b) / math.sqrt(np.pi)
        return np.fft.irfft(spec, n=N)
    n_lat, n_lon = grid or (2 * L + 2, 4 * L + 4)
    polar, azim, _ = sphere_grid(n_lat, n_lon)
    out = np.zeros((n_lat, n_lon))
    for k in range(L + 1):
        out += np.einsum("m,mij->ij", field.coeffs[k], _real_sh(k, polar, azim))
    return out


def grid_l2_sq(samples, n):
    """``int u^2`` by the grid quadrature matching :func:`expand`."""
    u = np.asarray(samples, dtype=float)
    if n == 2:
        return float(2 * np.pi * np.mean(u * u))
    _, _, w = sphere_grid(*u.shape)
    return float(np.sum(w * u * u))


def field_from_shape(E, t, L):
    """The field ``u`` with ``R = 1 + t u`` about the center of ``E``."""
    N = max(8 * L, 2048)
    return expand((E.samples(N) - 1.0) / t, 2, L)


def shape_from_field(field, t, center=(0.0, 0.0)):
    """Planar shape ``R = 1 + t u``."""
    if field.n != 2:
        raise ValueError("only planar shapes can be built from a field")
    c = field.coeffs
    modes = [(k, t * c[k][0] / math.sqrt(np.pi), t * c[k][1] / math.sqrt(np.pi))
             for k in range(1, field.L + 1)]
    return from_fourier(center, 1.0 + t * c[0][0] / math.sqrt(2 * np.pi), modes)


# --------------------------------------------------------------------------
# nonlocal quadratic form


@dataclass
class QuadraticFormReport:
    q_value: float
    q_trapezoid: float
    h1_seminorm: float
    ratio: float
    q_eta_hat: float
    epsilon: float
    quadrature_error: float

    def to_dict(self):
        return dict(self.__dict__)


def _form_weight(fam, delta):
    """``eta_eps(|x - y|) / |x - y|^2`` as a function of the angle gap."""
    d = 2.0 * np.abs(np.sin(0.5 * delta))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = fam.eta(d) / (d * d)
    return np.where(d > 0, w, 0.0)


def _delta_edges(fam):
    """Panel edges in the angle gap aligned with the kernel's own breakpoints."""
    eps = fam.epsilon
    chord = eps * np.asarray(fam.base.breakpoints, dtype=float)
    delta = 2 * np.arcsin(0.5 * chord[chord < 2.0])
    reach = 2 * math.asin(min(1.0, 0.5 * eps * fam.base.cutoff))
    first = min(eps, reach)
    edges = [quad.graded_edges(0.0, first, toward="a", smallest=1e-12),
             np.linspace(first, reach, 2 + int(8 * reach / eps)), delta, [np.pi]]
    return np.unique(np.concatenate(edges))


def modal_multipliers(fam, L, rtol=1e-11):
    """``q_k = int 2 (1 - cos k delta) eta_eps(|x - y|) / |x - y|^2 d delta`` for ``k <= L``."""
    edges = _delta_edges(fam)
    out = np.zeros(L + 1)
    for k in range(1, L + 1):
        f = lambda x, k=k: 2.0 * (1 - np.cos(k * x)) * _form_weight(fam, x)
        out[k] = 2.0 * quad.adaptive(f, edges, rtol=rtol, atol=1e-300).value
    return out


def default_form_nodes(fam, L=0):
    """Trapezoid size: at least 1024 and about 200 nodes per kernel length."""
    need = max(1024, 8 * L, 200.0 / fam.epsilon)
    return int(2 ** math.ceil(math.log2(need)))


def nonlocal_form_Q(field, fam, N=None):
    """``Q_eps(u) = int int (u(x) - u(y))^2 / |x - y|^2 eta_eps(|x - y|)`` on the circle.

    ``q_value`` diagonalizes the form in the Fourier basis, so only one
    adaptive 1D integral per degree is needed.  ``q_trapezoid`` is the
    ``N x N`` trapezoid rule kept as an independent check: on the diagonal
    the quotient is bounded by ``|u'|^2`` while ``eta_eps(0) = 0`` for every
    kernel with ``r^2 g(r) -> 0``, so the diagonal nodes carry no weight.
    The trapezoid converges slowly for kernels singular at the origin.
    """
    if field.n != 2:
        raise PreconditionError("the nonlocal form is implemented on the circle only")
    N = N or default_form_nodes(fam, field.L)
    if N < 8 * field.L:
        raise AliasingError(f"{N} nodes cannot resolve degree {field.L}")
    u = synthesize(field, N)
    h = 2 * np.pi / N
    slope = np.max(np.abs(np.diff(np.concatenate([u, u[:1]])))) / (2 * math.sin(h / 2))
    if slope > LIPSCHITZ_LIMIT:
        warnings.warn(f"difference quotient {slope:.3g} exceeds {LIPSCHITZ_LIMIT:g}",
                      NonLipschitzWarning, stacklevel=2)
    F = np.fft.rfft(u)
    auto = np.fft.irfft(np.abs(F) ** 2, n=N)          # sum_i u_i u_{i+m}
    S = 2.0 * float(np.dot(u, u)) - 2.0 * auto         # sum_i (u_i - u_{i+m})^2
    w = _form_weight(fam, h * np.arange(1, N))
    q = h * h * float(np.sum(S[1:] * w))
    q_modal = float(np.dot(modal_multipliers(fam, field.L), field.degree_energy()))
    h1 = field.grad_norm_sq
    ratio = q_modal / h1 if h1 > 0 else float("nan")
    return QuadraticFormReport(q_modal, q, h1, ratio, ratio - 1.0, fam.epsilon, abs(q - q_modal))


def synthesize_derivative(field, N):
    spec = np.zeros(N // 2 + 1, dtype=complex)
    for k in range(1, field.L + 1):
        a, b = field.coeffs[k]
        spec[k] = 0.5 * N * 1j * k * (a - 1j * b) / math.sqrt(np.pi)
    return np.fft.irfft(spec, n=N)


# --------------------------------------------------------------------------
# constraint and deficit checks


@dataclass
class ConstraintReport:
    n: int
    t: float
    volume_residual: float
    cubic_term: float
    c_hat: float
    gap: float
    gap_holds: bool
    applicable: bool
    reasons: list

    def to_dict(self):
        return dict(self.__dict__)


def _cubic_integral(field):
    u = synthesize(field, max(8 * field.L, 256) if field.n == 2 else
                   (2 * field.L + 8, 4 * field.L + 16))
    if field.n == 2:
        return float(2 * np.pi * np.mean(np.abs(u) ** 3))
    _, _, w = sphere_grid(*u.shape)
    return float(np.sum(w * np.abs(u) ** 3))


def constraint_checks(field, t, rtol=1e-6):
    """Volume expansion residual and the spectral-gap value for ``E_t``.

    The gap ``1/2 |grad u|^2 - (n - 1) |u|^2 - 1/2 |u|^2`` is only claimed
    nonnegative when the coefficients of degree 0 and 1 are as small as the
    volume and barycenter constraints force them to be; otherwise the
    report is flagged inapplicable.
    """
    n = field.n
    if not t > 0:
        raise PreconditionError("t must be positive")
    l2 = field.l2_norm_sq
    cubic = _cubic_integral(field)
    mean = field.coeffs[0][0] * math.sqrt(sphere_area(n))
    vol = abs(t * mean + (n - 1) * 0.5 * t * t * l2)
    denom = t ** 3 * cubic
    c_hat = vol / denom if denom > 0 else 0.0
    gap = 0.5 * field.grad_norm_sq - (n - 1) * l2 - 0.5 * l2

    reasons = []
    a0_bound = t * (n - 1) * l2 / (2 * math.sqrt(sphere_area(n))) + t * t * cubic
    if abs(field.coeffs[0][0]) > a0_bound * (1 + rtol) + 1e-14:
        reasons.append("degree-0 coefficient violates the volume constraint")
    if field.L >= 1:
        a1_bound = 0.5 * n * t * (l2 + (n - 1) * t * cubic) / math.sqrt(ball_volume(n))
        if np.max(np.abs(field.coeffs[1])) > a1_bound * (1 + rtol) + 1e-14:
            reasons.append("degree-1 coefficients violate the barycenter constraint")
    return ConstraintReport(n, t, vol, cubic, c_hat, gap, gap >= -1e-12 * max(1.0, l2),
                            not reasons, reasons)


def centered_nearly_spherical(field, t, L=None):
    """Impose ``|E_t| = pi`` and zero barycenter on the shape ``1 + t u``.

    Returns ``(t', field', shape)`` where ``t'`` is the larger of the sup
    norms of ``R - 1`` and ``R'``, so the re-extracted field satisfies
    ``||u||_inf, ||u'||_inf <= 1``.
    """
    E = recenter(scale_to_area(shape_from_field(field, t), np.pi))
    N = max(2048, 32 * E.max_mode)
    dev = E.samples(N) - 1.0
    t2 = max(float(np.max(np.abs(dev))), float(np.max(np.abs(E.samples(N, 1)))))
    return t2, expand(dev / t2, 2, L or E.max_mode), E


@dataclass
class DeficitReport:
    t: float
    u_l2_sq: float
    u_grad_sq: float
    local_deficit: float
    fuglede_lower: float
    fuglede_upper: float
    bracket_holds: bool
    per_slicing: float
    polar_quadratic: float
    polar_disk_average: float
    polar_residual: float
    nonlocal_deficit: float
    f_deficit: float
    f_lower: float
    prop_holds: bool
    gamma: float
    epsilon: float

    def to_dict(self):
        return dict(self.__dict__)


def deficit_checks(t, field, fam, gamma):
    """Local Fuglede bracket, polar-split residual and the energy-deficit lower bound."""
    if not 0.0 <= t < 0.5:
        raise PreconditionError("t must lie in [0, 1/2)")
    if field.n != 2:
        raise PreconditionError("deficit checks need a planar field")
    if not 0.0 < gamma < 1.0:
        raise PreconditionError("gamma must lie in (0, 1)")
    E = shape_from_field(field, t)
    l2, grad = field.l2_norm_sq, field.grad_norm_sq
    P = measure(E).local_perimeter
    local = P - 2 * np.pi
    lower = t * t / 10 * (l2 + grad)
    upper = 3 * t * t / 5 * grad
    slack = 1e-12 * 2 * np.pi
    per = per_slicing(E, fam)[0]
    quadratic, psi, psi_minus, _ = polar_terms(E, fam)
    nonlocal_def = quadratic + psi_minus
    f_def = local - gamma * nonlocal_def
    f_low = t * t / 16 * (1 - gamma) * (grad + l2)
    return DeficitReport(
        t, l2, grad, local, lower, upper,
        bool(lower - slack <= local <= upper + slack),
        per, quadratic, psi, abs(per - quadratic - psi), nonlocal_def, f_def, f_low,
        bool(f_def >= f_low - slack), float(gamma), fam.epsilon,
    )


def random_field(rng, L=8, power=1.5, n=2):
    """Random field on degrees ``2..L`` with coefficients decaying like ``k^-power``."""
    blocks = [np.zeros(multiplicity(k, n)) for k in range(L + 1)]
    for k in range(2, L + 1):
        blocks[k] = rng.normal(size=multiplicity(k, n)) / k ** power
    return SphericalField(n, L, tuple(blocks))


def random_centered_case(rng, t_max=0.02, L=8):
    """A centered, area-normalized nearly spherical case with ``t <= t_max``."""
    f = random_field(rng, L)
    u = synthesize(f, 1024)
    du = synthesize_derivative(f, 1024)
    f = f.scaled(1.0 / max(np.max(np.abs(u)), np.max(np.abs(du))))
    t = rng.uniform(0.25, 0.9) * t_max
    return centered_nearly_spherical(f, t)


def psi_constant_check(c, t, fam):
    """Disk-average term for ``u = c`` against the slicing value on ``B_{1 + t c}``."""
    E = from_fourier((0.0, 0.0), 1.0 + t * c, [])
    _, psi, _, _ = polar_terms(E, fam)
    direct = per_slicing(E, fam)[0]
    return {"psi": psi, "direct": direct, "relative": abs(psi - direct) / abs(direct),
            "disk_quadrature": disk_perimeter(fam, 1.0 + t * c)}
