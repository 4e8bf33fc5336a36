"""Command-line driver: reproducible parameter studies emitting CSV files.

Every subcommand writes RFC-4180-style CSV (UTF-8, '.' decimal) plus a
manifest file holding the fully resolved configuration and the toolkit
version, so a rerun with the same flags is byte-identical.  Config
precedence: built-in defaults < config file (flat key=value lines) <
command-line flags.  FRWAVE_WORKERS sets the process count for the
parameter sweeps that fan out.
"""

import argparse
import json
import math
import os
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import __version__
from .element import HUYNH_G2, CORRECTION_KINDS, reference_element
from .spectral import (SAMPLED, WEIGHTED, dispersion_curve, filter_kernel,
                       ppw)
from .stability import SCHEMES, cfl_limit, spectral_radius_sweep
from .advect1d import (FDAdvection1D, FDScheme, FRAdvection1D, TRANSIT, PENCIL,
                       bin_wavenumbers, build_grid, fd_point_grid,
                       matched_point_expansion, numeric_ppw,
                       wave_transfer_function)
from .mesh2d import (jitter, jitter_factor_for_skew, skew_angle,
                     uniform_quad_mesh, write_mesh)
from .euler2d import (FREulerSolver2D, FVEulerSolver2D, ooa, run_icv)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_manifest(out_path, config):
    manifest = dict(sorted(config.items()))
    manifest["version"] = __version__
    path = Path(str(out_path) + ".manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def parse_float_list(text):
    return [float(v) for v in str(text).split(",") if v != ""]


def _workers():
    try:
        return max(1, int(os.environ.get("FRWAVE_WORKERS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = _workers()
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with Pool(n) as pool:
        return pool.map(fn, items)


# ---------------------------------------------------------------------------
# subcommands

def cmd_dispersion(args):
    gammas = parse_float_list(args.gamma)
    outdir = Path(args.outdir)
    for gamma in gammas:
        curve = dispersion_curve(args.p, gamma, args.kind,
                                 n_samples=args.samples, closure=args.closure)
        rows = []
        for s in curve.samples:
            for i, ev in enumerate(s.eigenvalues):
                rows.append((s.k_hat, ev.real, ev.imag, i, args.p, gamma,
                             args.kind))
        path = outdir / f"dispersion_p{args.p}_gamma{_fmt(gamma)}.csv"
        write_csv(path, ["k_hat", "re_c", "im_c", "mode_index", "p", "gamma",
                         "correction_kind"], rows)
        write_manifest(path, {"command": "dispersion", "p": args.p,
                              "gamma": gamma, "kind": args.kind,
                              "samples": args.samples,
                              "closure": args.closure})
        print(path)
    return 0


def cmd_kernel(args):
    outdir = Path(args.outdir)
    curve = dispersion_curve(args.p, args.gamma, args.kind,
                             n_samples=args.samples)
    k_hat, g = filter_kernel(curve, args.time)
    path = outdir / f"kernel_p{args.p}_gamma{_fmt(args.gamma)}_t{_fmt(args.time)}.csv"
    write_csv(path, ["k_hat", "kernel", "p", "gamma", "t"],
              [(kh, gv, args.p, args.gamma, args.time) for kh, gv in zip(k_hat, g)])
    write_manifest(path, {"command": "kernel", "p": args.p, "gamma": args.gamma,
                          "kind": args.kind, "time": args.time,
                          "samples": args.samples})
    print(path)
    return 0


def cmd_ppw(args):
    outdir = Path(args.outdir)
    gammas = parse_float_list(args.gamma)
    rows = []
    for p in [int(v) for v in str(args.p).split(",")]:
        for gamma in gammas:
            curve = dispersion_curve(p, gamma, args.kind, n_samples=args.samples)
            rows.append((p, gamma, args.epsilon, ppw(curve, args.epsilon)))
    path = outdir / "ppw.csv"
    write_csv(path, ["p", "gamma", "epsilon", "ppw"], rows)
    write_manifest(path, {"command": "ppw", "p": args.p, "gamma": args.gamma,
                          "epsilon": args.epsilon, "kind": args.kind,
                          "samples": args.samples})
    print(path)
    return 0


def _one_cfl(job):
    scheme, order, gamma, kind = job
    res = cfl_limit(order - 1, gamma, scheme, correction_kind=kind)
    return (scheme, order, gamma, res.cfl_limit, res.detection)


def cmd_cfl_table(args):
    outdir = Path(args.outdir)
    schemes = [s.strip() for s in args.schemes.split(",")]
    orders = [int(v) for v in args.orders.split(",")]
    gammas = parse_float_list(args.gamma)
    jobs = [(s, o, g, args.kind) for s in schemes for o in orders for g in gammas]
    rows = _map(_one_cfl, jobs)
    path = outdir / "cfl_table.csv"
    write_csv(path, ["scheme", "spatial_order", "gamma", "cfl_limit",
                     "detection_rule"], rows)
    write_manifest(path, {"command": "cfl-table", "schemes": args.schemes,
                          "orders": args.orders, "gamma": args.gamma,
                          "kind": args.kind})
    print(path)
    return 0


def cmd_rho_sweep(args):
    outdir = Path(args.outdir)
    k_hat, rho = spectral_radius_sweep(args.p, args.gamma, args.scheme,
                                       args.tau, k_samples=args.samples)
    path = outdir / f"rho_p{args.p}_gamma{_fmt(args.gamma)}_tau{_fmt(args.tau)}.csv"
    write_csv(path, ["k_hat", "rho", "p", "gamma", "scheme", "tau"],
              [(kh, r, args.p, args.gamma, args.scheme, args.tau)
               for kh, r in zip(k_hat, rho)])
    write_manifest(path, {"command": "rho-sweep", "p": args.p,
                          "gamma": args.gamma, "scheme": args.scheme,
                          "tau": args.tau, "samples": args.samples})
    print(path)
    return 0


def _build_1d_solver(spec_text, gamma, dof):
    """solver spec: 'frN' (element solver, order N) or 'fdN' (stencil order N)."""
    kind = spec_text[:2]
    order = int(spec_text[2:])
    if kind == "fr":
        p = order - 1
        n_cells = dof // (p + 1)
        if n_cells * (p + 1) != dof:
            raise ValueError(f"DoF {dof} not divisible by p+1={p + 1}")
        return FRAdvection1D(build_grid(n_cells, gamma, 1.0), reference_element(p))
    if kind == "fd":
        gamma_pt = matched_point_expansion(gamma, order) if gamma != 1.0 else 1.0
        points = fd_point_grid(dof, gamma_pt, 1.0)
        return FDAdvection1D(points, 1.0, FDScheme(order, lf_blend=0.01))
    raise ValueError(f"unknown solver spec {spec_text!r} (want frN or fdN)")


def cmd_wave_test(args):
    outdir = Path(args.outdir)
    solver = _build_1d_solver(args.solver, args.gamma, args.dof)
    explicit = parse_float_list(args.k)
    if explicit:
        ks = np.array(explicit)
    else:
        ks = bin_wavenumbers(1.0, solver.dof, k_hat_max=args.k_hat_max * math.pi)
    table = wave_transfer_function(solver, ks, cfl=args.cfl, mode=args.mode,
                                   window=args.window)
    rows = [(kh, re, im, args.solver, args.gamma, args.cfl, args.mode)
            for kh, re, im in zip(table.k_hat, table.re_k_hat_prime,
                                  table.im_k_hat_prime)]
    path = outdir / f"wave_{args.solver}_gamma{_fmt(args.gamma)}.csv"
    write_csv(path, ["k_hat", "re_k_prime", "im_k_prime", "scheme", "gamma",
                     "cfl", "mode"], rows)
    write_manifest(path, {"command": "wave-test", "solver": args.solver,
                          "gamma": args.gamma, "dof": args.dof,
                          "cfl": args.cfl, "mode": args.mode,
                          "window": args.window,
                          "k_hat_max": args.k_hat_max})
    if args.ppw_epsilon is not None:
        print(f"numeric ppw (eps={args.ppw_epsilon}): "
              f"{numeric_ppw(table, args.ppw_epsilon):.4f}")
    print(path)
    return 0


def cmd_mesh_gen(args):
    outdir = Path(args.outdir)
    mesh = uniform_quad_mesh(args.nx, args.ny, args.length)
    if args.jitter > 0:
        mesh = jitter(mesh, args.jitter, args.seed)
    path = outdir / f"mesh_{args.nx}x{args.ny}_j{_fmt(args.jitter)}_s{args.seed}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(mesh, path)
    write_manifest(path, {"command": "mesh-gen", "nx": args.nx, "ny": args.ny,
                          "length": args.length, "jitter": args.jitter,
                          "seed": args.seed})
    print(path)
    return 0


def cmd_skew(args):
    outdir = Path(args.outdir)
    mesh = uniform_quad_mesh(args.nx, args.ny, args.length)
    rows = []
    for factor in parse_float_list(args.factors):
        jm = jitter(mesh, factor, args.seed)
        rows.append((args.nx, args.ny, factor, args.seed,
                     skew_angle(jm).alpha))
    path = outdir / "skew.csv"
    write_csv(path, ["nx", "ny", "jitter_factor", "seed", "alpha_deg"], rows)
    write_manifest(path, {"command": "skew", "nx": args.nx, "ny": args.ny,
                          "length": args.length, "factors": args.factors,
                          "seed": args.seed})
    print(path)
    return 0


def _icv_solver(args, n):
    mesh = uniform_quad_mesh(n, n, 10.0)
    if args.alpha > 0:
        _, mesh = jitter_factor_for_skew(mesh, args.alpha, args.seed, tol=0.15)
    elif args.jitter > 0:
        mesh = jitter(mesh, args.jitter, args.seed)
    if args.solver == "fv":
        return FVEulerSolver2D(mesh, riemann=args.riemann)
    return FREulerSolver2D(mesh, args.p, riemann=args.riemann)


def cmd_icv(args):
    outdir = Path(args.outdir)
    resolutions = [int(v) for v in args.resolutions.split(",")]
    reports = []
    rows = []
    for n in resolutions:
        solver = _icv_solver(args, n)
        rep = run_icv(solver, steps=args.steps, cfl=args.cfl)
        reports.append(rep)
        rows.append((args.solver, args.p if args.solver == "fr" else 2,
                     n, rep.dof, args.alpha, args.jitter, args.seed,
                     args.steps, args.cfl, rep.theta,
                     *rep.per_variable))
    path = outdir / f"icv_{args.solver}.csv"
    write_csv(path, ["solver", "order_or_p", "n", "dof", "alpha", "jitter",
                     "seed", "steps", "cfl", "theta", "err_rho", "err_rhou",
                     "err_rhov", "err_E"], rows)
    write_manifest(path, {"command": "icv", "solver": args.solver,
                          "p": args.p, "resolutions": args.resolutions,
                          "alpha": args.alpha, "jitter": args.jitter,
                          "seed": args.seed, "steps": args.steps,
                          "cfl": args.cfl, "riemann": args.riemann})
    if len(reports) >= 2:
        print(f"ooa: {ooa(reports):.4f}")
    print(path)
    return 0


def cmd_ooa(args):
    """Order of accuracy from an icv CSV produced by cmd_icv."""
    from .euler2d import ErrorReport
    rows = []
    with open(args.csv, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        idx_dof = header.index("dof")
        idx_theta = header.index("theta")
        for line in f:
            parts = line.strip().split(",")
            rows.append(ErrorReport(theta=float(parts[idx_theta]),
                                    per_variable=np.zeros(4),
                                    dof=int(parts[idx_dof])))
    print(f"ooa: {ooa(rows):.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser plumbing

def _load_config(path):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="frwave",
        description="Wave-resolution analysis and solvers for the upwinded "
                    "element scheme on stretched and warped meshes.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--outdir", default="out")
        return p

    p = add("dispersion", cmd_dispersion, help="dispersion/dissipation curves")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--gamma", default="1.0", help="comma-separated list")
    p.add_argument("--kind", default=HUYNH_G2, choices=CORRECTION_KINDS)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--closure", default=SAMPLED, choices=(SAMPLED, WEIGHTED))

    p = add("kernel", cmd_kernel, help="implied filter kernel")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--kind", default=HUYNH_G2, choices=CORRECTION_KINDS)
    p.add_argument("--time", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=256)

    p = add("ppw", cmd_ppw, help="points per wavelength table")
    p.add_argument("--p", default="2,3,4,5", help="comma-separated orders")
    p.add_argument("--gamma", default="1.0", help="comma-separated list")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--kind", default=HUYNH_G2, choices=CORRECTION_KINDS)
    p.add_argument("--samples", type=int, default=512)

    p = add("cfl-table", cmd_cfl_table, help="CFL limit table")
    p.add_argument("--schemes", default="RK33,RK44,RK55")
    p.add_argument("--orders", default="3,4,5")
    p.add_argument("--gamma", default="0.7,0.8,0.9,1.0,1.1,1.2,1.3")
    p.add_argument("--kind", default=HUYNH_G2, choices=CORRECTION_KINDS)

    p = add("rho-sweep", cmd_rho_sweep, help="spectral radius over wavenumber")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--scheme", default="RK44", choices=sorted(SCHEMES))
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--samples", type=int, default=512)

    p = add("wave-test", cmd_wave_test, help="measured modified wavenumbers")
    p.add_argument("--solver", default="fr4",
                   help="frN (element, order N) or fdN (stencil order N)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--dof", type=int, default=180)
    p.add_argument("--k", default="", help="explicit wavenumbers (rad/length)")
    p.add_argument("--k-hat-max", type=float, default=0.75,
                   help="sweep bins up to this fraction of pi")
    p.add_argument("--cfl", type=float, default=0.05)
    p.add_argument("--mode", default=TRANSIT, choices=(TRANSIT, PENCIL))
    p.add_argument("--window", type=float, default=0.5)
    p.add_argument("--ppw-epsilon", type=float, default=None)

    p = add("mesh-gen", cmd_mesh_gen, help="write a (jittered) quad mesh")
    p.add_argument("--nx", type=int, default=19)
    p.add_argument("--ny", type=int, default=19)
    p.add_argument("--length", type=float, default=10.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("skew", cmd_skew, help="skew-angle report for jitter factors")
    p.add_argument("--nx", type=int, default=19)
    p.add_argument("--ny", type=int, default=19)
    p.add_argument("--length", type=float, default=10.0)
    p.add_argument("--factors", default="0.05,0.15,0.4")
    p.add_argument("--seed", type=int, default=0)

    p = add("icv", cmd_icv, help="convecting-vortex error study")
    p.add_argument("--solver", default="fr", choices=("fr", "fv"))
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--resolutions", default="8,16,32")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--cfl", type=float, default=0.01)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0,
                   help="target mesh-average skew angle in degrees")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--riemann", default="rusanov", choices=("rusanov", "roe"))

    p = add("ooa", cmd_ooa, help="order of accuracy from an icv CSV")
    p.add_argument("--csv", required=True)

    return parser


def main(argv=None):
    parser = build_parser()
    args, remaining = parser.parse_known_args(argv)
    if args.config:
        defaults = _load_config(args.config)
        # re-parse with config values as defaults, flags still win
        parser2 = build_parser()
        for action in parser2._subparsers._group_actions[0].choices.values():
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
        args = parser2.parse_args(argv)
    elif remaining:
        parser.error(f"unrecognized arguments: {' '.join(remaining)}")
    try:
        return args.fn(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
