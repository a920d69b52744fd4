"""Command-line front end.

Subcommands mirror the library layers: closed-form kinematics and
eigenstate PDFs, wavegroup field sampling, quadrature marginals, slice
analysis, the split-step oracle, and canned scenario presets.  Exit codes:
0 success, 1 usage error, 2 numerical failure, 3 manifest FAIL.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis
from .errors import AnalysisError, ConfigError, CorrintError, GridError, NumericsError
from .field import Axis, Field, read_field, write_field, write_field_csv, write_field_pgm
from .kinematics import collide, fringe_spacing, path_kinematics, ratio_R
from .marginals import Quadrature, marginal_over_mirror, marginal_over_mirror_and_p2
from .model import PathId, config_hash, load_config
from .oracle import BarrierModel, GridSpec2D, compare_fields, evolve_2body, wall_offset_1d
from .presets import PRESET_NAMES
from .scenario import run_scenario
from .wavegroup import GaussianPacket1D, WavegroupState, sample_grid
from .eigenstate import PDF_KINDS, PhasePair, pdf_closed_form, sample_eigenstate_grid

_FORMATS = ("bin", "csv", "pgm")
_WRITERS = {"bin": write_field, "csv": write_field_csv, "pgm": write_field_pgm}


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CORRINT_THREADS")
    return int(env) if env else None


def _axis_arg(text: str, axis_id: int) -> Axis:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"axis spec must be lo:hi:n, got {text!r}")
    return Axis(axis_id, float(parts[0]), float(parts[1]), int(parts[2]))


def _write_outputs(field: Field, out: str, stem: str, formats) -> list:
    os.makedirs(out, exist_ok=True)
    written = []
    for fmt in formats:
        path = os.path.join(out, f"{stem}.{fmt}")
        _WRITERS[fmt](field, path)
        written.append(path)
    return written


def _cmd_kinematics(args) -> int:
    """Per-path kinematic table as CSV on stdout."""
    config = load_config(args.config)
    m1, mm, m2 = config.masses
    v1, vm, v2 = (b.v0 for b in config.bodies)
    hbar = config.hbar
    k0 = np.array([b.kbar(hbar) for b in config.bodies])
    fr1 = fringe_spacing(m1, v1, vm, hbar)
    fr2 = fringe_spacing(m2, v2, vm, hbar)
    print("path,v1_final,V_final,v2_final,delta_K,conserved_p,conserved_E,"
          "R,fringe_x1,fringe_x2")
    for path in PathId:
        pk = path_kinematics(config, path)
        d_k = float((pk.wavevector_map @ k0 - k0)[1])
        try:
            r_text = f"{ratio_R(config, path):.17g}"
        except CorrintError:
            r_text = ""
        cols = [path.name]
        cols += [f"{v:.17g}" for v in pk.final_velocities]
        cols += [f"{d_k:.17g}", f"{pk.conserved_p:.17g}", f"{pk.conserved_E:.17g}",
                 r_text, f"{fr1:.17g}", f"{fr2:.17g}"]
        print(",".join(cols))
    return 0


def _cmd_eigenstate(args) -> int:
    config = load_config(args.config)
    if args.pdf is not None:
        phi = PhasePair(alpha=args.alpha, beta=args.beta)
        print(f"{args.pdf}(alpha={args.alpha:.10g}, beta={args.beta:.10g}) = "
              f"{pdf_closed_form(args.pdf, phi):.17g}")
        return 0
    axes = []
    if args.x1:
        axes.append(_axis_arg(args.x1, 0))
    if args.X:
        axes.append(_axis_arg(args.X, 1))
    if args.x2:
        axes.append(_axis_arg(args.x2, 2))
    fixed = {}
    for name, axis_id in (("fix_x1", 0), ("fix_X", 1), ("fix_x2", 2)):
        val = getattr(args, name)
        if val is not None:
            fixed[axis_id] = val
    field = sample_eigenstate_grid(config, tuple(axes), fixed, args.time)
    written = _write_outputs(field, args.out, "eigenstate", args.formats)
    print("\n".join(written))
    return 0


def _cmd_wavegroup(args) -> int:
    config = load_config(args.config)
    state = WavegroupState.from_config(config)
    axes, fixed = [], {}
    for name, axis_id in (("x1", 0), ("X", 1), ("x2", 2)):
        spec = getattr(args, name)
        if spec is not None:
            axes.append(_axis_arg(spec, axis_id))
        fval = getattr(args, f"fix_{name}")
        if fval is not None:
            fixed[axis_id] = fval
    written = []
    for t in args.times:
        field = sample_grid(state, tuple(axes), fixed, t, threads=_threads(args))
        written += _write_outputs(field, args.out, f"wavegroup_t{t:g}", args.formats)
    print("\n".join(written))
    return 0


def _cmd_marginal(args) -> int:
    config = load_config(args.config)
    state = WavegroupState.from_config(config)
    quad = Quadrature(abs_tol=args.abs_tol)
    written = []
    for t in args.times:
        if args.x2 is not None:
            res = marginal_over_mirror(
                state, t, _axis_arg(args.x1, 0), _axis_arg(args.x2, 2), quad
            )
            stem = f"marginal_x1x2_t{t:g}"
        else:
            res = marginal_over_mirror_and_p2(
                state, t, _axis_arg(args.x1, 0), quad
            )
            stem = f"marginal_x1_t{t:g}"
        bad = int(np.size(res.converged) - np.count_nonzero(res.converged))
        if bad:
            raise NumericsError(f"{bad} cells failed abs_tol={args.abs_tol:g}")
        written += _write_outputs(res.field, args.out, stem, args.formats)
    print("\n".join(written))
    return 0


def _cmd_analyze(args) -> int:
    field = read_field(args.field)
    if field.ndim == 2:
        _, j = field.peak_index()
        vals, ds = field.line_slice(0, int(j))
    else:
        vals, ds = field.values.copy(), field.axes[0].step
    period = analysis.fringe_period(vals, ds)
    if period is None:
        print("fringe_period: none detected")
    else:
        print(f"fringe_period: {period:.10g}")
    try:
        window = analysis.half_max_window(vals)
        vis = analysis.visibility(vals, window=window, ds=ds, period_hint=period)
        print(f"visibility (half-max window): {vis:.10g}")
    except AnalysisError as exc:
        print(f"visibility: n/a ({exc})")
    if field.ndim == 2:
        print(f"ridge_count({args.threshold:g}): "
              f"{analysis.ridge_count(field.values, args.threshold)}")
    return 0


def _cmd_oracle(args) -> int:
    config = load_config(args.config)
    p1b, mb = config.particle1, config.mirror
    p1 = GaussianPacket1D(p1b.mass, p1b.kbar(config.hbar), p1b.x0, p1b.sigma_x)
    pm = GaussianPacket1D(mb.mass, mb.kbar(config.hbar), mb.x0, mb.sigma_x)
    snapshots = args.snapshots
    steps = max(int(round(t / args.dt)) for t in snapshots)
    grid = GridSpec2D(
        (args.x1_lo, args.x1_hi), (args.X_lo, args.X_hi),
        args.grid, args.grid_X or args.grid, args.dt, max(steps, 1),
    )
    barrier = None
    if args.V0 > 0:
        barrier = BarrierModel(args.V0, args.w)
        mu = p1.mass * pm.mass / (p1.mass + pm.mass)
        k_rel = mu * abs(p1b.v0 - mb.v0) / config.hbar
        u_w, r_abs = wall_offset_1d(barrier, mu, k_rel, config.hbar)
        print(f"barrier effective wall offset: {u_w:.8g}  |r| = {r_abs:.8g}")
    run = evolve_2body(
        p1, pm, grid, barrier, snapshots, hbar=config.hbar,
        absorbing=args.absorbing, config_hash_bytes=config_hash(config),
    )
    written = []
    for t, f in zip(run.times, run.fields):
        written += _write_outputs(f, args.out, f"oracle2body_t{t:g}", args.formats)
    for i, t in enumerate(run.times):
        print(f"t={t:g}: norm={run.norms[i]:.12g} energy={run.energies[i]:.12g}")
    if args.compare is not None:
        ref = read_field(args.compare)
        l2, period = compare_fields(ref, run.fields[-1])
        print(f"compare vs {args.compare}: l2_rel={l2:.6g} period_rel={period:.6g}")
    print("\n".join(written))
    return 0


def _cmd_scenario(args) -> int:
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    result = run_scenario(
        args.name, overrides=overrides or None, out_dir=args.out,
        threads=_threads(args), formats=tuple(args.formats),
    )
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.label}: "
              f"{c.metric} = {c.measured:.10g} (want {c.expected})")
    for path in result.written:
        print(path)
    if not result.passed:
        print(f"{result.name}: manifest FAIL", file=sys.stderr)
        return 3
    print(f"{result.name}: manifest PASS")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrint",
        description="Correlated-interference simulator: two particles "
                    "sharing one movable mirror.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="system config file")
        p.add_argument("--out", default="corrint-out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (or CORRINT_THREADS)")
        p.add_argument("--format", dest="formats", action="append",
                       choices=_FORMATS, default=None,
                       help="output format(s); repeatable; default bin")

    p = sub.add_parser("kinematics", help="collision algebra for a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_kinematics)

    p = sub.add_parser("eigenstate", help="closed-form PDFs / plane-wave grids")
    add_common(p)
    p.add_argument("--pdf", choices=PDF_KINDS, default=None)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--x1", default=None, help="axis spec lo:hi:n")
    p.add_argument("--X", default=None)
    p.add_argument("--x2", default=None)
    p.add_argument("--fix-x1", dest="fix_x1", type=float, default=None)
    p.add_argument("--fix-X", dest="fix_X", type=float, default=None)
    p.add_argument("--fix-x2", dest="fix_x2", type=float, default=None)
    p.add_argument("--time", type=float, default=0.0)
    p.set_defaults(func=_cmd_eigenstate)

    p = sub.add_parser("wavegroup", help="sample the five-path packet PDF")
    add_common(p)
    p.add_argument("--x1", default=None)
    p.add_argument("--X", default=None)
    p.add_argument("--x2", default=None)
    p.add_argument("--fix-x1", dest="fix_x1", type=float, default=None)
    p.add_argument("--fix-X", dest="fix_X", type=float, default=None)
    p.add_argument("--fix-x2", dest="fix_x2", type=float, default=None)
    p.add_argument("--times", type=float, nargs="+", required=True)
    p.set_defaults(func=_cmd_wavegroup)

    p = sub.add_parser("marginal", help="integrate the PDF over the mirror")
    add_common(p)
    p.add_argument("--x1", required=True)
    p.add_argument("--x2", default=None,
                   help="omit to also integrate particle 2 out")
    p.add_argument("--times", type=float, nargs="+", required=True)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_marginal)

    p = sub.add_parser("analyze", help="fringe metrics of a stored field")
    p.add_argument("field", help="path to a .bin or .csv field file")
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("oracle", help="split-step reference evolution")
    sub2 = p.add_subparsers(dest="oracle_kind", required=True)
    p2 = sub2.add_parser("2body", help="(x1, X) evolution with contact barrier")
    add_common(p2)
    p2.add_argument("--grid", type=int, required=True, help="x1 points (pow2)")
    p2.add_argument("--grid-X", dest="grid_X", type=int, default=None,
                    help="X points (default: same as --grid)")
    p2.add_argument("--x1-lo", type=float, required=True)
    p2.add_argument("--x1-hi", type=float, required=True)
    p2.add_argument("--X-lo", type=float, required=True)
    p2.add_argument("--X-hi", type=float, required=True)
    p2.add_argument("--dt", type=float, required=True)
    p2.add_argument("--snapshots", type=float, nargs="+", required=True)
    p2.add_argument("--V0", type=float, default=0.0, help="barrier height")
    p2.add_argument("--w", type=float, default=0.1, help="barrier width")
    p2.add_argument("--absorbing", action="store_true")
    p2.add_argument("--compare", default=None,
                    help="field file to compare the last snapshot against")
    p2.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("scenario", help="run a bundled preset")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a preset key; repeatable")
    p.add_argument("--out", default=None, help="write artifacts here")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--format", dest="formats", action="append",
                   choices=_FORMATS, default=None)
    p.set_defaults(func=_cmd_scenario)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract wants 1
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "formats", None) in (None, []):
        if hasattr(args, "formats"):
            args.formats = ["bin", "pgm"] if args.command == "scenario" else ["bin"]
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericsError, GridError, AnalysisError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except CorrintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
