"""One-dimensional nonlocal perimeters and slices of planar star shapes.

For a finite union of intervals ``J`` the 1D critical energy

    E1(J) = P1(J) - Per1(J)

has a closed form in terms of the tail integral
``J_eps(d) = int_d^inf (t - d) rho_eps(t) dt``; the brute-force oracle
integrates the defining double integral directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .kernels import KernelError, slice_tail_exact

TANGENCY_TOL = 1e-8


class SliceError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalUnion:
    """Ordered, disjoint, non-touching open intervals."""

    intervals: tuple = ()
    dropped: int = field(default=0, compare=False)

    @classmethod
    def of(cls, pairs, dropped=0):
        pairs = sorted((float(a), float(b)) for a, b in pairs if b > a)
        merged = []
        for a, b in pairs:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return cls(tuple(merged), dropped)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def bounded(self):
        return all(math.isfinite(a) and math.isfinite(b) for a, b in self.intervals)

    @property
    def measure(self):
        return sum(b - a for a, b in self.intervals)

    @property
    def local_perimeter(self):
        """Number of finite endpoints (the 1D perimeter)."""
        return sum(math.isfinite(a) + math.isfinite(b) for a, b in self.intervals)

    def hull(self):
        if not self.intervals:
            return self
        return IntervalUnion(((self.intervals[0][0], self.intervals[-1][1]),))

    def complement(self):
        """Connected components of the complement, in order."""
        out = []
        left = -math.inf
        for a, b in self.intervals:
            if a > left:
                out.append((left, a))
            left = b
        if left < math.inf:
            out.append((left, math.inf))
        return out


# --------------------------------------------------------------------------
# closed forms


def tail_integral_J(fam, d):
    """``J_eps(d)`` by adaptive tail quadrature (``J_eps(inf) = 0``)."""
    if d == math.inf:
        return 0.0
    return slice_tail_exact(fam, d)


def _Jfun(fam, exact):
    if exact:
        return lambda d: 0.0 if d == math.inf else slice_tail_exact(fam, d)
    return lambda d: 0.0 if d == math.inf else float(fam.slice_tail(d))


def _cross(Jf, ci, cj):
    """``int_{ci x cj} rho(s - t)`` for components ``ci`` left of ``cj``."""
    p, q = ci
    r, s = cj
    return Jf(r - q) - Jf(r - p) - Jf(s - q) + Jf(s - p)


def crit1_closed_form(J, fam, exact=False):
    """Critical energy ``E1(J) = P1(J) - Per1(J)`` of an interval union.

    Sums the self energies of the bounded complement gaps and the cross
    interactions between every pair of complement components.
    """
    if not isinstance(J, IntervalUnion):
        J = IntervalUnion.of(J)
    Jf = _Jfun(fam, exact)
    comps = J.complement()
    total = 0.0
    for i, ci in enumerate(comps):
        if math.isfinite(ci[0]) and math.isfinite(ci[1]):
            total += 4.0 * Jf(ci[1] - ci[0])
        for cj in comps[i + 1:]:
            total += 4.0 * _cross(Jf, ci, cj)
    return total


def per1_closed_form(J, fam, exact=False):
    if not isinstance(J, IntervalUnion):
        J = IntervalUnion.of(J)
    return J.local_perimeter - crit1_closed_form(J, fam, exact)


def _axis_nodes(lo, hi, near, eps, order):
    """GL nodes on ``[lo, hi]`` graded geometrically toward ``near``."""
    length = hi - lo
    fine = min(0.25 * eps, length)
    geo = fine * 0.5 ** np.arange(0, 44)[::-1]
    steps = np.arange(fine, length, 0.5 * eps)
    frac = np.unique(np.concatenate([[0.0], geo, steps, [length]]))
    frac = frac[frac <= length]
    edges = lo + frac if near == lo else hi - frac[::-1]
    return quad.panels(edges, order)


def per1_bruteforce(J, fam, order=10):
    """``Per1(J) = 2 int_J int_{J^c} rho_eps(s - t) dt ds`` by tensor quadrature.

    Each interval/complement-component rectangle is integrated with
    composite Gauss-Legendre rules graded toward the corner where the two
    pieces are closest.
    """
    if not isinstance(J, IntervalUnion):
        J = IntervalUnion.of(J)
    if not J.intervals:
        return 0.0
    if not J.bounded:
        raise SliceError("brute-force Per1 needs a bounded union; use the closed form")
    eps = fam.epsilon
    reach = eps * fam.base.cutoff
    total = 0.0
    for a, b in J.intervals:
        for p, q in J.complement():
            if p >= b:  # component on the right
                gap = p - b
                if gap >= reach:
                    continue
                q_eff = min(q, p + reach)
                s, ws = _axis_nodes(a, b, b, eps, order)
                t, wt = _axis_nodes(p, q_eff, p, eps, order)
            else:
                gap = a - q
                if gap >= reach:
                    continue
                p_eff = max(p, q - reach)
                s, ws = _axis_nodes(a, b, a, eps, order)
                t, wt = _axis_nodes(p_eff, q, q, eps, order)
            vals = fam.rho(s[:, None] - t[None, :])
            total += 2.0 * float(ws @ vals @ wt)
    return total


# --------------------------------------------------------------------------
# batched critical energy for many slices


def crit1_batched(starts, ends, fam):
    """Critical energy of many bounded slices at once.

    ``starts``/``ends`` have shape ``(..., k)``, sorted along the last axis
    and padded with NaN after the valid intervals.
    """
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    k = starts.shape[-1]
    count = np.sum(np.isfinite(starts), axis=-1)
    inf = np.full(starts.shape[:-1] + (1,), np.inf)
    # component i = (L_i, U_i), i = 0..count
    L = np.concatenate([-inf, ends], axis=-1)
    U = np.concatenate([starts, inf], axis=-1)
    idx = np.arange(k + 1)
    U = np.where(idx == count[..., None], np.inf, U)
    valid = idx <= count[..., None]

    def Jd(d):
        d = np.where(np.isfinite(d), d, np.inf)
        out = np.zeros(d.shape)
        fin = np.isfinite(d)
        out[fin] = fam.slice_tail(np.maximum(d[fin], 0.0))
        return out

    total = np.zeros(starts.shape[:-1])
    for i in range(k + 1):
        vi = valid[..., i]
        if i >= 1:
            gap = np.where(vi & (i < count), U[..., i] - L[..., i], np.inf)
            total += 4.0 * Jd(gap)
        for j in range(i + 1, k + 1):
            vij = vi & valid[..., j]
            if not np.any(vij):
                continue
            with np.errstate(invalid="ignore"):
                d1 = np.where(vij, L[..., j] - U[..., i], np.inf)
                d2 = np.where(vij, L[..., j] - L[..., i], np.inf)
                d3 = np.where(vij, U[..., j] - U[..., i], np.inf)
                d4 = np.where(vij, U[..., j] - L[..., i], np.inf)
            total += 4.0 * (Jd(d1) - Jd(d2) - Jd(d3) + Jd(d4))
    return total, count


# --------------------------------------------------------------------------
# slicing star shapes


@dataclass
class SliceGrid:
    """Slices of a shape along ``M`` directions and ``Y`` offsets each.

    Coordinates are relative to the shape center: a point of the line with
    offset ``p`` is ``c + p * sigma_perp + s * sigma``.
    """

    alphas: np.ndarray   # (M,)
    offsets: np.ndarray  # (M, Y)
    weights: np.ndarray  # (M, Y) quadrature weights in the offset variable
    starts: np.ndarray   # (M, Y, k)
    ends: np.ndarray     # (M, Y, k)
    dropped: int
    convex_path: bool


def _p_and_derivs(E, psi, alpha):
    R, R1, R2 = E.radius(psi), E.radius(psi, 1), E.radius(psi, 2)
    sn, cs = np.sin(psi - alpha), np.cos(psi - alpha)
    p = R * sn
    dp = R1 * sn + R * cs
    ddp = R2 * sn + 2 * R1 * cs - R * sn
    return p, dp, ddp


def _refine_extrema(E, psi0, alpha, h, iters=6):
    """Newton on ``p'(psi) = 0`` kept within ``psi0 +- h``."""
    psi = psi0.copy()
    for _ in range(iters):
        _, dp, ddp = _p_and_derivs(E, psi, alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(ddp != 0, dp / ddp, 0.0)
        psi = np.clip(psi - step, psi0 - h, psi0 + h)
    p, _, _ = _p_and_derivs(E, psi, alpha)
    return psi, p


def _polish_roots(E, psi, lo, hi, alpha, target, increasing, iters=8, tol=1e-14):
    """Safeguarded Newton for ``p(psi) = target`` inside ``[lo, hi]``.

    ``increasing`` tells which side of the bracket has ``p < target``; the
    bracket signs are taken from the monotone branch, never recomputed.
    """
    sign_lo = np.where(increasing, -1.0, 1.0)
    for _ in range(iters):
        R, R1 = E.radius_and_slope(psi)
        sn, cs = np.sin(psi - alpha), np.cos(psi - alpha)
        f = R * sn - target
        dp = R1 * sn + R * cs
        if np.max(np.abs(f), initial=0.0) <= tol:
            break
        left = np.sign(f) == sign_lo
        lo = np.where(left, psi, lo)
        hi = np.where(left, hi, psi)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = psi - f / dp
        bad = ~((nxt >= lo) & (nxt <= hi))
        psi = np.where(f == 0, psi, np.where(bad, 0.5 * (lo + hi), nxt))
    return psi


def _offset_rule(pmin, pmax, Y):
    """Offsets ``c - w cos(phi)`` at midpoints in ``phi``; weights include the Jacobian."""
    phi = (np.arange(Y) + 0.5) * np.pi / Y
    c = 0.5 * (pmax + pmin)
    w = 0.5 * (pmax - pmin)
    y = c[:, None] - w[:, None] * np.cos(phi)[None, :]
    wt = w[:, None] * np.sin(phi)[None, :] * (np.pi / Y)
    return y, wt


def _slices_convex(E, alphas, Y, N, offsets=None):
    M = alphas.size
    h = 2 * np.pi / N
    psi = h * np.arange(N)
    R = E.samples(N)
    P = R[None, :] * np.sin(psi[None, :] - alphas[:, None])
    imin = np.argmin(P, axis=1)
    imax = np.argmax(P, axis=1)
    psi_min, pmin = _refine_extrema(E, psi[imin], alphas, h)
    psi_max, pmax = _refine_extrema(E, psi[imax], alphas, h)

    rows = np.arange(M)[:, None]
    col = (imin[:, None] + np.arange(N)[None, :]) % N
    Pr = P[rows, col]
    Sr = psi[imin][:, None] + h * np.arange(N)[None, :]
    kpos = (imax - imin) % N
    Pr[:, 0] = pmin
    Sr[:, 0] = psi_min
    Pr[np.arange(M), kpos] = pmax
    Sr[np.arange(M), kpos] = psi_min + np.mod(psi_max - psi_min, 2 * np.pi)

    c = np.arange(N + 2)[None, :]
    inc = c <= kpos[:, None]
    src = np.where(inc, c, (c - 1) % N)
    width = 4.0 * (np.max(np.abs(R)) + 1.0)
    base_inc = (2 * np.arange(M) * width)[:, None]
    base_dec = base_inc + width
    Pv = np.take_along_axis(Pr, src, axis=1)
    keys = np.where(inc, Pv + base_inc, -Pv + base_dec)
    Sv = np.take_along_axis(Sr, src, axis=1) + np.where(c == N + 1, 2 * np.pi, 0.0)

    if offsets is None:
        y, wt = _offset_rule(pmin, pmax, Y)
    else:
        y = np.clip(np.asarray(offsets, float), pmin[:, None], pmax[:, None])
        wt = np.zeros_like(y)
        Y = y.shape[1]
    flat_keys = keys.ravel()
    flat_psi = Sv.ravel()
    ends = []
    for sign, base in ((1.0, base_inc), (-1.0, base_dec)):
        q = (sign * y + base).ravel()
        j = np.clip(np.searchsorted(flat_keys, q), 1, flat_keys.size - 1)
        k0, k1 = flat_keys[j - 1], flat_keys[j]
        s0, s1 = flat_psi[j - 1], flat_psi[j]
        frac = np.clip((q - k0) / (k1 - k0), 0.0, 1.0)
        guess = s0 + frac * (s1 - s0)
        al = np.repeat(alphas, Y)
        root = _polish_roots(E, guess, np.minimum(s0, s1), np.maximum(s0, s1), al, y.ravel(),
                             sign > 0)
        s = E.radius(root) * np.cos(root - al)
        ends.append(s.reshape(M, Y))
    lo = np.minimum(ends[0], ends[1])[..., None]
    hi = np.maximum(ends[0], ends[1])[..., None]
    short = (hi - lo) < TANGENCY_TOL
    dropped = int(np.count_nonzero(short))
    lo = np.where(short, np.nan, lo)
    hi = np.where(short, np.nan, hi)
    return SliceGrid(alphas, y, wt, lo, hi, dropped, True)


def _direction_branches(E, alpha, psi, P, h):
    """Monotone pieces of ``p(psi)`` between consecutive local extrema."""
    N = psi.size
    d = np.diff(np.concatenate([P, P[:1]]))
    sgn = np.sign(d)
    sgn[sgn == 0] = 1
    turn = np.nonzero(sgn != np.roll(sgn, 1))[0]  # sample index of each extremum
    if turn.size < 2:
        raise SliceError("could not locate support extrema")
    ext_psi, ext_p = _refine_extrema(E, psi[turn].astype(float), np.full(turn.size, alpha), h)
    branches = []
    for i in range(turn.size):
        j0, j1 = turn[i], turn[(i + 1) % turn.size]
        span = (j1 - j0) % N
        idx = (j0 + np.arange(span + 1)) % N
        ps = P[idx].copy()
        ss = psi[j0] + h * np.arange(span + 1)
        ps[0], ss[0] = ext_p[i], ext_psi[i]
        ps[-1] = ext_p[(i + 1) % turn.size]
        ss[-1] = psi[j0] + h * span + (ext_psi[(i + 1) % turn.size] - psi[j1])
        branches.append((ss, ps))
    return branches, float(np.min(ext_p)), float(np.max(ext_p))


def _slices_general(E, alphas, Y, N, offsets=None):
    M = alphas.size
    h = 2 * np.pi / N
    psi = h * np.arange(N)
    R = E.samples(N)
    all_s, ys, wts = [], [], []
    dropped = 0
    for m, alpha in enumerate(alphas):
        P = R * np.sin(psi - alpha)
        branches, pmin, pmax = _direction_branches(E, alpha, psi, P, h)
        if offsets is None:
            y, wt = _offset_rule(np.array([pmin]), np.array([pmax]), Y)
            y, wt = y[0], wt[0]
        else:
            y, wt = np.atleast_1d(offsets[m]).astype(float), np.zeros(len(offsets[m]))
        roots = np.full((y.size, len(branches)), np.nan)
        for bi, (ss, ps) in enumerate(branches):
            inc = ps[-1] > ps[0]
            order = slice(None) if inc else slice(None, None, -1)
            pv, sv = ps[order], ss[order]
            lo_p, hi_p = pv[0], pv[-1]
            inside = (y > lo_p) & (y < hi_p)
            if not np.any(inside):
                continue
            yy = y[inside]
            j = np.clip(np.searchsorted(pv, yy), 1, pv.size - 1)
            frac = (yy - pv[j - 1]) / (pv[j] - pv[j - 1])
            guess = sv[j - 1] + frac * (sv[j] - sv[j - 1])
            lo = np.minimum(sv[j - 1], sv[j])
            hi = np.maximum(sv[j - 1], sv[j])
            r = _polish_roots(E, guess, lo, hi, np.full(yy.size, alpha), yy, inc)
            roots[inside, bi] = E.radius(r) * np.cos(r - alpha)
        roots.sort(axis=1)
        n_roots = np.sum(np.isfinite(roots), axis=1)
        odd = n_roots % 2 == 1
        if np.any(odd):  # a root lost at a tangency: drop the whole slice
            dropped += int(np.count_nonzero(odd))
            roots[odd] = np.nan
        all_s.append(roots)
        ys.append(y)
        wts.append(wt)
    kmax = max(1, max(r.shape[1] for r in all_s) // 2)
    starts = np.full((M, len(ys[0]), kmax), np.nan)
    ends = np.full_like(starts, np.nan)
    for m, roots in enumerate(all_s):
        a = roots[:, 0::2]
        b = roots[:, 1::2]
        short = (b - a) < TANGENCY_TOL
        dropped += int(np.count_nonzero(short))
        a = np.where(short, np.nan, a)
        b = np.where(short, np.nan, b)
        # compact valid intervals to the front
        order = np.argsort(np.where(np.isfinite(a), a, np.inf), axis=1)
        a = np.take_along_axis(a, order, axis=1)
        b = np.take_along_axis(b, order, axis=1)
        starts[m, :, :a.shape[1]] = a
        ends[m, :, :b.shape[1]] = b
    return SliceGrid(alphas, np.array(ys), np.array(wts), starts, ends, dropped, False)


def slice_grid(E, n_directions=256, n_offsets=512, n_samples=None, convex=None):
    """Slice ``E`` along ``n_directions`` uniform directions on ``[0, pi)``."""
    from .shapes2d import is_convex

    alphas = np.pi * np.arange(n_directions) / n_directions
    N = n_samples or max(4096, 64 * E.max_mode)
    if convex is None:
        convex = is_convex(E)
    if convex:
        return _slices_convex(E, alphas, n_offsets, N)
    return _slices_general(E, alphas, n_offsets, N)


def slice_star_shape(E, sigma, y, n_samples=None):
    """The slice ``{s : y sigma_perp + s sigma in E}`` as an :class:`IntervalUnion`."""
    sigma = np.asarray(sigma, dtype=float)
    nrm = np.hypot(*sigma)
    if not nrm > 0:
        raise SliceError("direction must be nonzero")
    sigma = sigma / nrm
    alpha = math.atan2(sigma[1], sigma[0])
    perp = np.array([-sigma[1], sigma[0]])
    c = np.asarray(E.center, dtype=float)
    p_rel = float(y) - float(c @ perp)
    shift = float(c @ sigma)
    N = n_samples or max(4096, 64 * E.max_mode)
    grid = _slices_general(E, np.array([alpha]), 1, N, offsets=[[p_rel]])
    a, b = grid.starts[0, 0], grid.ends[0, 0]
    ok = np.isfinite(a)
    return IntervalUnion.of(zip(a[ok] + shift, b[ok] + shift), dropped=grid.dropped)


def slice_energies(E, fam, n_directions=256, n_offsets=512, grid=None):
    """Per-slice ``Per1`` values together with the grid that produced them."""
    grid = grid or slice_grid(E, n_directions, n_offsets)
    crit, count = crit1_batched(grid.starts, grid.ends, fam)
    return grid, 2.0 * count - crit, crit


def dump_slice_energies(E, fam, path, n_directions=64, n_offsets=64):
    """Write one CSV row per (direction, offset) with the slice energies."""
    grid, per1, crit = slice_energies(E, fam, n_directions, n_offsets)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "offset", "weight", "n_intervals", "per1", "crit1"])
        count = np.sum(np.isfinite(grid.starts), axis=-1)
        for m in range(grid.alphas.size):
            for j in range(grid.offsets.shape[1]):
                w.writerow([f"{grid.alphas[m]:.12e}", f"{grid.offsets[m, j]:.12e}",
                            f"{grid.weights[m, j]:.12e}", int(count[m, j]),
                            f"{per1[m, j]:.12e}", f"{crit[m, j]:.12e}"])
    return path


def random_union(rng, max_intervals=4, length=(0.1, 2.0), gap=(0.05, 1.5)):
    """Bounded union of 1..max_intervals intervals with random lengths and gaps."""
    k = int(rng.integers(1, max_intervals + 1))
    x = float(rng.uniform(-1.0, 1.0))
    out = []
    for _ in range(k):
        L = float(rng.uniform(*length))
        out.append((x, x + L))
        x += L + float(rng.uniform(*gap))
    return IntervalUnion.of(out)


__all__ = [
    "IntervalUnion", "SliceError", "SliceGrid", "KernelError",
    "tail_integral_J", "crit1_closed_form", "per1_closed_form", "per1_bruteforce",
    "crit1_batched", "slice_grid", "slice_star_shape", "slice_energies",
    "dump_slice_energies", "random_union",
]
