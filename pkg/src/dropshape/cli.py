"""Command-line entry point: ``dropshape <subcommand> [options]``.

Exit codes: 0 success, 1 unknown subcommand, 2 invalid input, 3 numerical
failure.  Reports go to ``--out`` when given, otherwise to stdout; a
one-line summary is always printed (to stderr when stdout carries JSON).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import io
from ._parallel import set_threads
from .kernels import check_hypotheses, kernel_from_spec, moment
from .nonlocal_perimeter import METHODS, energy, per_nonlocal
from .onedim import (
    crit1_closed_form, dump_slice_energies, per1_bruteforce, random_union, slice_grid,
)
from .shapes2d import random_nonconvex_shape, shape_from_dict

COMMANDS = ("kernel-info", "perim", "energy", "slice-check", "fuglede-check", "optimize",
            "sweep", "convexify", "oned-check")

PRESETS = {
    "disk": {"center": [0.0, 0.0], "r0": 1.0, "modes": []},
    "peanut": {"center": [0.0, 0.0], "r0": 1.0, "modes": [[2, 0.1, 0.0]]},
    "trefoil": {"center": [0.0, 0.0], "r0": 1.0, "modes": [[3, 0.3, 0.0]]},
}


def load_shape(ref):
    if ref in PRESETS:
        return shape_from_dict(PRESETS[ref])
    return shape_from_dict(io.read_json(ref))


def load_kernel(ref, params=None):
    if ref and os.path.exists(ref):
        spec = io.read_json(ref)
    else:
        spec = {"family": ref or "exponential", "params": json.loads(params) if params else {}}
    return kernel_from_spec(spec)


def _fam(args):
    return load_kernel(args.kernel, args.kernel_params).at_scale(args.eps)


def _emit(args, payload, summary):
    if getattr(args, "out", None):
        io.write_json(args.out, payload)
        print(summary)
    else:
        sys.stdout.write(io.dumps(payload))
        print(summary, file=sys.stderr)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


# --------------------------------------------------------------------------
# subcommands


def cmd_kernel_info(args):
    ker = load_kernel(args.kernel, args.kernel_params)
    rep = check_hypotheses(ker)
    payload = {"kernel": ker.spec(), "first_moment": moment(ker, 1),
               "second_moment": moment(ker, 2), "l1_norm": ker.l1_norm,
               "cutoff": ker.cutoff, "hypotheses": rep.to_dict()}
    _emit(args, payload, f"kernel-info {ker.family_tag}: hypotheses {'ok' if rep.all_ok else 'FAILED'}")


def cmd_perim(args):
    rep = per_nonlocal(load_shape(args.shape), _fam(args), args.method)
    _emit(args, rep.to_dict(), f"perim {args.method}: Per_eps = {rep.per_nonlocal:.12e}")


def _energy_job(job):
    fam = load_kernel(job.get("kernel"), json.dumps(job.get("kernel_params") or {})).at_scale(
        float(job["eps"]))
    rep = energy(load_shape(job["shape"]), fam, float(job["gamma"]), job.get("method", "slicing"))
    return rep.to_dict()


def cmd_energy(args):
    if args.batch:
        jobs = io.read_json(args.batch)
        if not isinstance(jobs, list):
            raise ValueError("batch file must hold a JSON list")
        payload = [_energy_job(j) for j in jobs]
        _emit(args, payload, f"energy: {len(payload)} evaluations")
        return
    if args.shape is None or args.eps is None or args.gamma is None:
        raise ValueError("energy needs --shape, --eps and --gamma (or --batch)")
    rep = energy(load_shape(args.shape), _fam(args), args.gamma, args.method)
    _emit(args, rep.to_dict(), f"energy: F = {rep.f_gamma:.12e}")


def cmd_slice_check(args):
    E, fam = load_shape(args.shape), _fam(args)
    out = {m: per_nonlocal(E, fam, m).per_nonlocal for m in ("slicing", "area")}
    try:
        out["polar"] = per_nonlocal(E, fam, "polar").per_nonlocal
    except ValueError:
        out["polar"] = None
    vals = [v for v in out.values() if v is not None]
    spread = (max(vals) - min(vals)) / abs(out["slicing"])
    grid = slice_grid(E, 64, 64)
    payload = {"values": out, "relative_spread": spread, "dropped_slices": grid.dropped}
    if args.dump:
        dump_slice_energies(E, fam, args.dump)
        payload["dump"] = args.dump
    _emit(args, payload, f"slice-check: relative spread {spread:.3e}")


def cmd_fuglede_check(args):
    from .spectral import (
        SphericalField, constraint_checks, deficit_checks, expand, nonlocal_form_Q,
    )
    fam = _fam(args)
    if args.field:
        d = io.read_json(args.field)
        field = SphericalField.from_entries(int(d["n"]), int(d["L"]), d["coeffs"])
    else:
        L = max(args.mode, 2)
        th = 2 * np.pi * np.arange(8 * L) / (8 * L)
        field = expand(np.cos(args.mode * th), 2, L)
    payload = {"constraints": constraint_checks(field, args.t).to_dict(),
               "form": nonlocal_form_Q(field, fam).to_dict(),
               "deficit": deficit_checks(args.t, field, fam, args.gamma).to_dict()}
    ok = payload["deficit"]["bracket_holds"] and payload["deficit"]["prop_holds"]
    _emit(args, payload, f"fuglede-check: {'all bounds hold' if ok else 'a bound FAILED'}")


def _config(args):
    from .optimize import OptimizerConfig
    return OptimizerConfig(K=args.K, max_iters=args.max_iters, grad_tol=args.grad_tol,
                           seed=args.seed, threads=args.threads)


def cmd_optimize(args):
    from .optimize import minimize
    rep = minimize(load_shape(args.shape), _fam(args), args.gamma, _config(args))
    _emit(args, rep.to_dict(),
          f"optimize: converged={rep.converged} iters={rep.iterations} u_h1={rep.u_h1:.3e}")


def cmd_sweep(args):
    from .optimize import random_inits, sweep, write_sweep_csv
    rng = np.random.default_rng(args.seed)
    inits = random_inits(rng, args.inits, K=args.K)
    ker = load_kernel(args.kernel, args.kernel_params)
    rows = sweep(ker, args.gamma, _floats(args.eps), inits, _config(args))
    if args.out:
        write_sweep_csv(args.out, rows)
        print(f"sweep: {len(rows)} rows written to {args.out}")
    else:
        from .optimize import SWEEP_COLUMNS
        w = csv.writer(sys.stdout, lineterminator="\r\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([io.format_cell(r[c]) for c in SWEEP_COLUMNS])
        print(f"sweep: {len(rows)} rows", file=sys.stderr)


def cmd_convexify(args):
    from .optimize import convexification_experiment
    if args.shape:
        shapes = [load_shape(args.shape)]
    else:
        rng = np.random.default_rng(args.seed)
        shapes = [random_nonconvex_shape(rng) for _ in range(args.count)]
    rows = convexification_experiment(shapes, _fam(args), args.gamma)
    payload = [dict(r.to_dict(), shape=E.to_dict()) for r, E in zip(rows, shapes)]
    passed = sum(r.passed for r in rows)
    _emit(args, payload, f"convexify: {passed}/{len(rows)} pass")


def cmd_oned_check(args):
    ker = load_kernel(args.kernel, args.kernel_params)
    fam = ker.at_scale(args.eps)
    rng = np.random.default_rng(args.seed)
    errs = []
    for _ in range(args.count):
        J = random_union(rng)
        closed = crit1_closed_form(J, fam)
        brute = J.local_perimeter - per1_bruteforce(J, fam)
        errs.append(abs(closed - brute))
    payload = {"count": args.count, "max_error": max(errs), "errors": errs}
    _emit(args, payload, f"oned-check: max error {max(errs):.3e} over {args.count} unions")


HANDLERS = {
    "kernel-info": cmd_kernel_info, "perim": cmd_perim, "energy": cmd_energy,
    "slice-check": cmd_slice_check, "fuglede-check": cmd_fuglede_check,
    "optimize": cmd_optimize, "sweep": cmd_sweep, "convexify": cmd_convexify,
    "oned-check": cmd_oned_check,
}


def build_parser():
    p = argparse.ArgumentParser(prog="dropshape", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command")

    def add(name, help_text, shape=True, eps=True, gamma=False):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--kernel", default="exponential",
                        help="kernel spec JSON file or family name")
        sp.add_argument("--kernel-params", default=None, help="JSON object of family parameters")
        sp.add_argument("--out", default=None, help="output path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $DROPSHAPE_THREADS or CPU count)")
        if shape:
            sp.add_argument("--shape", default=None if shape == "optional" else "disk",
                            help="shape JSON file or preset (disk, peanut, trefoil)")
        if eps:
            sp.add_argument("--eps", type=float, default=0.1)
        if gamma:
            sp.add_argument("--gamma", type=float, default=0.5)
        return sp

    add("kernel-info", "kernel moments and hypothesis checks", shape=False, eps=False)
    sp = add("perim", "nonlocal perimeter of a shape")
    sp.add_argument("--method", choices=METHODS, default="slicing")
    sp = add("energy", "liquid-drop energy report", gamma=True)
    sp.add_argument("--method", choices=METHODS, default="slicing")
    sp.add_argument("--batch", default=None, help="JSON list of jobs")
    sp = add("slice-check", "cross-check slicing against the other evaluators")
    sp.add_argument("--dump", default=None, help="CSV dump of slice energies")
    sp = add("fuglede-check", "deficit, constraint and quadratic-form checks",
             shape=False, gamma=True)
    sp.add_argument("--field", default=None, help="field JSON file")
    sp.add_argument("--mode", type=int, default=3, help="use u = cos(mode t) when no field")
    sp.add_argument("--t", type=float, default=0.02)
    for name, help_text in (("optimize", "minimize F from one shape"),
                            ("sweep", "minimize from random inits over an eps grid")):
        sp = add(name, help_text, shape=(name == "optimize"), eps=(name == "optimize"),
                 gamma=True)
        sp.add_argument("--K", type=int, default=8)
        sp.add_argument("--max-iters", type=int, default=60)
        sp.add_argument("--grad-tol", type=float, default=1e-6)
        if name == "sweep":
            sp.add_argument("--eps", default="0.05,0.1,0.2", help="comma-separated eps grid")
            sp.add_argument("--inits", type=int, default=5)
    sp = add("convexify", "hull comparison on nonconvex shapes", shape="optional", gamma=True)
    sp.add_argument("--count", type=int, default=10)
    sp = add("oned-check", "closed form against brute force on random unions", shape=False)
    sp.set_defaults(eps=1.0)
    sp.add_argument("--count", type=int, default=50)
    return p


def _validate(args):
    eps = getattr(args, "eps", None)
    if isinstance(eps, float) and not (eps > 0 and math.isfinite(eps)):
        raise ValueError("epsilon must be positive")
    gamma = getattr(args, "gamma", None)
    if gamma is not None and not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and argv[0] in ("-h", "--help"):
        parser.print_help()
        return 0
    if not argv or argv[0] not in COMMANDS:
        parser.print_usage(sys.stderr)
        if argv:
            print(f"dropshape: unknown command {argv[0]!r}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        set_threads(args.threads)
        _validate(args)
        HANDLERS[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"dropshape: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"dropshape: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
