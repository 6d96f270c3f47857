"""Planar star-shaped sets described by a truncated Fourier radial function.

A shape is the set ``{c + r (cos t, sin t) : 0 <= r < R(t)}`` with

    R(t) = r0 + sum_k a_k cos(k t) + b_k sin(k t),   k = 1..K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

VALIDATION_POINTS = 2048
HULL_SAMPLES = 4096
CONVEX_TOL = -1e-8


class GeometryError(ValueError):
    """Invalid shape or a geometric operation that cannot be carried out."""


@dataclass(frozen=True, eq=False)
class StarShape2D:
    center: tuple
    r0: float
    a: np.ndarray
    b: np.ndarray

    @property
    def max_mode(self):
        return int(self.a.size)

    @property
    def modes(self):
        return [(k + 1, float(self.a[k]), float(self.b[k])) for k in range(self.max_mode)]

    @property
    def is_empty(self):
        return self.r0 == 0.0 and not np.any(self.a) and not np.any(self.b)

    @property
    def coefficients(self):
        """Complex ``c_k = a_k - i b_k`` so that ``R = r0 + Re sum c_k e^{ikt}``."""
        return self.a - 1j * self.b

    def radius(self, t, deriv=0):
        """Evaluate ``d^deriv R / dt^deriv`` at arbitrary angles (complex Horner)."""
        t = np.asarray(t, dtype=float)
        K = self.max_mode
        if K == 0:
            return np.full(t.shape, self.r0 if deriv == 0 else 0.0)
        k = np.arange(1, K + 1)
        c = self.coefficients * (1j * k) ** deriv
        z = np.exp(1j * t)
        acc = np.full(t.shape, c[-1], dtype=complex)
        for ck in c[-2::-1]:
            acc = acc * z + ck
        out = (acc * z).real
        return out + self.r0 if deriv == 0 else out

    def radius_and_slope(self, t):
        """``(R, R')`` at arbitrary angles from one shared Horner pass."""
        t = np.asarray(t, dtype=float)
        K = self.max_mode
        if K == 0:
            return np.full(t.shape, self.r0), np.zeros(t.shape)
        c = self.coefficients
        kc = 1j * np.arange(1, K + 1) * c
        z = np.exp(1j * t)
        acc = np.full(t.shape, c[-1], dtype=complex)
        dacc = np.full(t.shape, kc[-1], dtype=complex)
        for ck, dk in zip(c[-2::-1], kc[-2::-1]):
            acc = acc * z + ck
            dacc = dacc * z + dk
        return (acc * z).real + self.r0, (dacc * z).real

    def samples(self, N, deriv=0):
        """``R^(deriv)`` on the uniform grid ``t_j = 2 pi j / N`` via an inverse FFT."""
        K = self.max_mode
        if 2 * K >= N:
            raise GeometryError(f"grid of {N} points cannot resolve mode {K}")
        spec = np.zeros(N // 2 + 1, dtype=complex)
        k = np.arange(1, K + 1)
        spec[1:K + 1] = 0.5 * N * self.coefficients * (1j * k) ** deriv
        if deriv == 0:
            spec[0] = N * self.r0
        return np.fft.irfft(spec, n=N)

    def boundary(self, t):
        t = np.asarray(t, dtype=float)
        R = self.radius(t)
        return np.stack([self.center[0] + R * np.cos(t), self.center[1] + R * np.sin(t)], -1)

    def polygon(self, N=HULL_SAMPLES):
        t = 2 * np.pi * np.arange(N) / N
        R = self.samples(N)
        return np.stack([self.center[0] + R * np.cos(t), self.center[1] + R * np.sin(t)], -1)

    def grid_size(self, minimum=VALIDATION_POINTS):
        return max(minimum, 32 * self.max_mode)

    def to_dict(self):
        return {"center": [float(self.center[0]), float(self.center[1])],
                "r0": float(self.r0),
                "modes": [[k, a, b] for k, a, b in self.modes]}


def from_fourier(center, r0, modes):
    """Build a validated :class:`StarShape2D`.

    ``modes`` is an iterable of ``(k, a_k, b_k)``.  A ``k = 0`` entry is
    folded into ``r0``.  ``r0 = 0`` with no modes denotes the empty set.
    """
    r0 = float(r0)
    entries = [(int(k), float(a), float(b)) for k, a, b in modes]
    K = max([k for k, _, _ in entries], default=0)
    a = np.zeros(K)
    b = np.zeros(K)
    for k, ak, bk in entries:
        if k < 0:
            raise GeometryError("Fourier mode index must be nonnegative")
        if k == 0:
            r0 += ak
        else:
            a[k - 1] += ak
            b[k - 1] += bk
    while K > 0 and a[K - 1] == 0.0 and b[K - 1] == 0.0:
        K -= 1
    a, b = a[:K].copy(), b[:K].copy()
    c = (float(center[0]), float(center[1]))
    if not all(map(math.isfinite, (*c, r0, *a, *b))):
        raise GeometryError("shape coefficients must be finite")
    shape = StarShape2D(c, r0, a, b)
    if shape.is_empty:
        return shape
    R = shape.samples(max(VALIDATION_POINTS, 4 * K + 2))
    if np.min(R) <= 0:
        raise GeometryError(f"radial function is not positive (min R = {np.min(R):.4g})")
    return shape


def from_samples(center, R, K):
    """Least-squares (FFT) fit of ``K`` modes to uniform radial samples."""
    R = np.asarray(R, dtype=float)
    N = R.size
    X = np.fft.rfft(R) / N
    K = min(K, N // 2 - 1)
    a = 2.0 * X[1:K + 1].real
    b = -2.0 * X[1:K + 1].imag
    # drop trailing modes at round-off level
    mag = np.hypot(a, b)
    keep = np.nonzero(mag > 1e-15 * max(abs(X[0].real), 1.0))[0]
    K = int(keep[-1]) + 1 if keep.size else 0
    return from_fourier(center, X[0].real, [(k + 1, a[k], b[k]) for k in range(K)])


@dataclass
class GeometryReport:
    area: float
    local_perimeter: float
    barycenter: tuple
    r_min: float
    r_max: float
    is_convex: bool

    def to_dict(self):
        d = dict(self.__dict__)
        d["barycenter"] = list(self.barycenter)
        return d


def curvature_numerator(E, N=None):
    """``R^2 + 2R'^2 - R R''`` on the uniform grid; its sign is the curvature sign."""
    N = N or E.grid_size()
    R, R1, R2 = (E.samples(N, d) for d in (0, 1, 2))
    return R * R + 2 * R1 * R1 - R * R2


def is_convex(E, N=None):
    if E.is_empty:
        return True
    num = curvature_numerator(E, N)
    scale = E.r0 ** 2
    return bool(np.min(num) >= CONVEX_TOL * scale)


def measure(E, N=None):
    """Area, perimeter, barycenter, radial extent and convexity of ``E``."""
    if E.is_empty:
        return GeometryReport(0.0, 0.0, tuple(E.center), 0.0, 0.0, True)
    N = N or E.grid_size()
    t = 2 * np.pi * np.arange(N) / N
    h = 2 * np.pi / N
    R = E.samples(N)
    R1 = E.samples(N, 1)
    area = 0.5 * h * np.sum(R * R)
    per = h * np.sum(np.sqrt(R * R + R1 * R1))
    m3 = h * np.sum(R**3 * np.cos(t)) / 3.0, h * np.sum(R**3 * np.sin(t)) / 3.0
    bary = (E.center[0] + m3[0] / area, E.center[1] + m3[1] / area)
    return GeometryReport(float(area), float(per), (float(bary[0]), float(bary[1])),
                          float(R.min()), float(R.max()), is_convex(E, N))


# --------------------------------------------------------------------------
# transformations


def _rebuild(E, center, r0, a, b):
    return StarShape2D((float(center[0]), float(center[1])), float(r0),
                       np.asarray(a, float).copy(), np.asarray(b, float).copy())


def dilate(E, lam):
    """Scale by ``lam > 0`` about the shape's own center."""
    if not lam > 0:
        raise GeometryError("dilation factor must be positive")
    return _rebuild(E, E.center, lam * E.r0, lam * E.a, lam * E.b)


def scale_about_origin(E, lam):
    """The set ``lam * E`` (dilation about the origin of the plane)."""
    if not lam > 0:
        raise GeometryError("dilation factor must be positive")
    c = (lam * E.center[0], lam * E.center[1])
    return _rebuild(E, c, lam * E.r0, lam * E.a, lam * E.b)


def translate(E, v):
    return _rebuild(E, (E.center[0] + v[0], E.center[1] + v[1]), E.r0, E.a, E.b)


def scale_to_area(E, target):
    if not target > 0:
        raise GeometryError("target area must be positive")
    return dilate(E, math.sqrt(target / measure(E).area))


def _reparametrize(E, new_center, K_out, N):
    """Radii of ``E`` seen from ``new_center`` on a uniform angle grid, refit."""
    d = np.array(new_center, float) - np.array(E.center, float)
    psi = 2 * np.pi * np.arange(N) / N
    R = E.samples(N)
    R1 = E.samples(N, 1)
    px, py = R * np.cos(psi) - d[0], R * np.sin(psi) - d[1]
    tx = R1 * np.cos(psi) - R * np.sin(psi)
    ty = R1 * np.sin(psi) + R * np.cos(psi)
    if np.min(px * ty - py * tx) <= 0:
        raise GeometryError("shape is not star-shaped about the shifted center")
    ang = np.unwrap(np.arctan2(py, px))
    ang_ext = np.concatenate([ang - 2 * np.pi, ang, ang + 2 * np.pi])
    psi_ext = np.concatenate([psi - 2 * np.pi, psi, psi + 2 * np.pi])
    theta = psi.copy()
    # the angle map is monotone: invert by interpolation, then polish with Newton
    s = np.interp(theta, ang_ext, psi_ext)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    for _ in range(30):
        Rs, R1s = E.radius(s), E.radius(s, 1)
        qx, qy = Rs * np.cos(s) - d[0], Rs * np.sin(s) - d[1]
        F = cos_t * qy - sin_t * qx
        dqx = R1s * np.cos(s) - Rs * np.sin(s)
        dqy = R1s * np.sin(s) + Rs * np.cos(s)
        dF = cos_t * dqy - sin_t * dqx
        step = F / dF
        s = s - step
        if np.max(np.abs(step)) < 1e-15:
            break
    Rs = E.radius(s)
    rad = cos_t * (Rs * np.cos(s) - d[0]) + sin_t * (Rs * np.sin(s) - d[1])
    if np.min(rad) <= 0 or np.max(np.abs(F)) > 1e-11:
        raise GeometryError("ray casting about the new center failed")
    return from_samples(new_center, rad, K_out)


def recenter(E, tol=1e-9, max_iter=20):
    """Re-express ``E`` about its barycenter so that ``|int_E (x - c) dx| <= tol``."""
    if E.is_empty:
        return E
    K_out = max(E.max_mode, 64)
    N = max(VALIDATION_POINTS, 16 * K_out)
    cur = E
    for _ in range(max_iter):
        g = measure(cur)
        off = np.array(g.barycenter) - np.array(cur.center)
        if np.hypot(*off) * g.area <= tol:
            return cur
        cur = _reparametrize(cur, g.barycenter, K_out, N)
    raise GeometryError(f"recentering did not converge in {max_iter} iterations")


def transform(E, action, arg=None):
    """Dispatch ``scale_to_area``, ``recenter``, ``dilate`` or ``translate``."""
    if action == "scale_to_area":
        return scale_to_area(E, arg)
    if action == "recenter":
        return recenter(E)
    if action == "dilate":
        return dilate(E, arg)
    if action == "translate":
        return translate(E, arg)
    raise GeometryError(f"unknown transform {action!r}")


# --------------------------------------------------------------------------
# convex hull


def hull_polygon(E, n_samples=HULL_SAMPLES):
    """Counter-clockwise vertices of the convex hull of boundary samples."""
    pts = E.polygon(n_samples)
    return pts[ConvexHull(pts).vertices]


def polygon_perimeter(V):
    return float(np.sum(np.hypot(*(np.roll(V, -1, axis=0) - V).T)))


def polygon_area(V):
    x, y = V[:, 0], V[:, 1]
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _ray_polygon(V, center, theta):
    """Distance from ``center`` to a convex polygon along rays at ``theta``."""
    P = V - np.asarray(center)
    phi = np.arctan2(P[:, 1], P[:, 0])
    start = int(np.argmin(phi))
    P = np.roll(P, -start, axis=0)
    phi = np.unwrap(np.roll(phi, -start))
    Q = np.roll(P, -1, axis=0)
    th = np.mod(theta - phi[0], 2 * np.pi) + phi[0]
    j = np.clip(np.searchsorted(phi, th, side="right") - 1, 0, len(P) - 1)
    e = np.stack([np.cos(theta), np.sin(theta)], -1)
    edge = Q[j] - P[j]
    num = P[j, 0] * edge[:, 1] - P[j, 1] * edge[:, 0]
    den = e[:, 0] * edge[:, 1] - e[:, 1] * edge[:, 0]
    return num / den


@dataclass(frozen=True)
class HullResult:
    shape: StarShape2D
    perimeter: float
    area: float
    vertices: np.ndarray


def convex_hull_full(E, n_samples=HULL_SAMPLES, K_out=None):
    """Hull as a refit star shape plus exact polygon perimeter and area."""
    V = hull_polygon(E, n_samples)
    K_out = K_out or max(E.max_mode, 64)
    N = max(VALIDATION_POINTS, 16 * K_out)
    theta = 2 * np.pi * np.arange(N) / N
    rad = _ray_polygon(V, E.center, theta)
    return HullResult(from_samples(E.center, rad, K_out), polygon_perimeter(V),
                      polygon_area(V), V)


def convex_hull(E, n_samples=HULL_SAMPLES, K_out=None):
    """Convex hull re-cast as a star shape about the same center."""
    if E.is_empty:
        return E
    if is_convex(E):
        return E
    return convex_hull_full(E, n_samples, K_out).shape


# --------------------------------------------------------------------------
# nearly spherical sets


@dataclass
class NearlySphericalDecomposition:
    t: float
    u_samples: np.ndarray
    sup_norm: float
    lip_norm: float
    centered: bool
    valid: bool
    gradient_bound: float | None

    @property
    def theta(self):
        N = self.u_samples.size
        return 2 * np.pi * np.arange(N) / N


def nearly_spherical_decompose(E, N=None, center_tol=1e-9):
    """Write ``R = 1 + t u`` with ``t = ||R - 1||_inf``."""
    N = N or max(VALIDATION_POINTS, 32 * E.max_mode)
    R = E.samples(N)
    R1 = E.samples(N, 1)
    dev = R - 1.0
    t = float(np.max(np.abs(dev)))
    g = measure(E, N)
    off = np.hypot(*(np.array(g.barycenter) - np.array(E.center)))
    centered = bool(off * g.area <= center_tol)
    if t == 0.0:
        return NearlySphericalDecomposition(0.0, np.zeros(N), 0.0, 0.0, centered, True,
                                            0.0 if g.is_convex else None)
    u = dev / t
    sup = float(np.max(np.abs(u)))
    lip = float(np.max(np.abs(R1)) / t)
    valid = t < 0.5 and sup <= 1.0 + 1e-12 and lip <= 1.0 + 1e-12
    bound = None
    if g.is_convex and sup * t < 1:
        s = sup * t
        bound = 2.0 * (1 + s) / (1 - s) * math.sqrt(s)
    return NearlySphericalDecomposition(t, u, sup, lip, centered, bool(valid), bound)


def normal_deviation(E, N=None):
    """``max |nu_E(x) - x/|x||`` over boundary samples (origin-based rays)."""
    N = N or E.grid_size()
    t = 2 * np.pi * np.arange(N) / N
    R, R1 = E.samples(N), E.samples(N, 1)
    er = np.stack([np.cos(t), np.sin(t)], -1)
    et = np.stack([-np.sin(t), np.cos(t)], -1)
    nu = (R[:, None] * er - R1[:, None] * et) / np.hypot(R, R1)[:, None]
    x = np.asarray(E.center) + R[:, None] * er
    xhat = x / np.linalg.norm(x, axis=1)[:, None]
    return float(np.max(np.linalg.norm(nu - xhat, axis=1)))


def normal_deviation_bound(delta):
    return 2.0 * math.sqrt(delta / (1.0 + delta))


# --------------------------------------------------------------------------
# random families used by the suites


def random_shape(rng, K=8, amp=0.05, kmin=1, power=2.0, center=(0.0, 0.0)):
    """Unit-mean shape with ``|a_k|, |b_k| <= amp / k^power`` for ``kmin <= k <= K``."""
    modes = []
    for k in range(kmin, K + 1):
        bound = amp / k**power
        modes.append((k, rng.uniform(-bound, bound), rng.uniform(-bound, bound)))
    return from_fourier(center, 1.0, modes)


def random_nonconvex_shape(rng, max_tries=200):
    """Star shape with a visible concavity (single dominant mode plus noise)."""
    for _ in range(max_tries):
        k = int(rng.integers(2, 6))
        amp = rng.uniform(0.12, 0.3) if k > 2 else rng.uniform(0.25, 0.4)
        phase = rng.uniform(0, 2 * np.pi)
        modes = [(k, amp * math.cos(phase), amp * math.sin(phase))]
        for j in range(2, 7):
            if j != k:
                modes.append((j, rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)))
        E = from_fourier((0.0, 0.0), 1.0, modes)
        if not is_convex(E):
            return E
    raise GeometryError("could not draw a nonconvex shape")


def shape_from_dict(d):
    if not isinstance(d, dict) or "r0" not in d:
        raise GeometryError("shape file needs 'center', 'r0' and 'modes'")
    return from_fourier(d.get("center", (0.0, 0.0)), d["r0"], d.get("modes", []))
