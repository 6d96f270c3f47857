"""Nonlocal quadratic forms converging to the Dirichlet energy.

For ``u = cos(k theta)`` the local form is ``k^2 ||u||^2 = k^2 pi``.  The
nonlocal form built from a kernel at scale ``eps`` approaches it from
below as ``eps`` shrinks, and the constraint checks explain why the
degree-one mode has to be removed before a spectral gap can hold.
"""

import math

import numpy as np

from dropshape.kernels import build_kernel
from dropshape.spectral import circle_grid, constraint_checks, expand, nonlocal_form_Q

theta = circle_grid(64)
base = build_kernel("exponential")
for k in (2, 3, 5):
    f = expand(np.cos(k * theta), 2, 8)
    row = []
    for eps in (0.4, 0.2, 0.1, 0.05, 0.025):
        q = nonlocal_form_Q(f, base.at_scale(eps)).q_value
        row.append(q / (k * k * math.pi))
    print(f"k = {k}: Q_eps / (k^2 pi) = " + ", ".join(f"{r:.4f}" for r in row))

for k in (1, 2, 3):
    rep = constraint_checks(expand(np.cos(k * theta), 2, 4), t=0.02)
    state = "applicable" if rep.applicable else "not applicable"
    print(f"cos({k} theta): gap = {rep.gap:+.4f} ({state})")
