"""Command-line front end.

Subcommands: simulate, lift, basis, train, tune, predict, evaluate, pipeline.
Each prints its effective configuration before running. Exit codes:
0 success, 2 usage or config error, 3 missing file, 4 malformed data or
dimension mismatch, 5 numerical failure (divergence, no feasible
regularization), 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import lifting, opinf, pipeline, pod, rom, tuning
from .config import ConfigError, load_config
from .data import read_snapshots, write_snapshots
from .errors import DimensionError, DivergenceError, FormatError, NoFeasibleRegularization

log = logging.getLogger("liftlearn")


def _echo(name, settings):
    print(f"[{name}] effective configuration:")
    print(json.dumps(settings, indent=2, sort_keys=True, default=str))


def _add_form_flags(p):
    p.add_argument("--linear", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--quadratic", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--constant", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--input", action=argparse.BooleanOptionalAction, default=False,
                   help="learn an input operator driven by the forcing signal")


def _add_forcing_flags(p):
    p.add_argument("--forcing-amplitude", type=float, default=None)
    p.add_argument("--forcing-frequency", type=float, default=None)


def _forcing(args):
    if args.forcing_amplitude is None:
        return None
    return rom.ForcingSignal("sinusoid", args.forcing_amplitude, args.forcing_frequency or 1.0)


def _form(args):
    return opinf.ModelForm(args.linear, args.quadratic, args.constant, int(args.input))


def _load_training(args):
    basis = pod.read_basis(args.basis)
    snaps = read_snapshots(args.snapshots)
    if not snaps.has_derivs:
        raise ValueError(f"{args.snapshots}: training snapshots need time derivatives")
    if snaps.n != basis.n:
        raise DimensionError(f"snapshots have n={snaps.n} but the basis has n={basis.n}")
    if args.t_max is not None:
        snaps = snaps.select(snaps.times <= args.t_max + 1e-12)
    S, Sdot = pod.encode(basis, snaps)
    return basis, snaps, S, Sdot


def cmd_simulate(args):
    overrides = {k: v for k, v in {
        "fom.kind": args.kind, "fom.n_x": args.n_x, "fom.diffusivity": args.diffusivity,
        "fom.t_final": args.t_final, "fom.dt": args.dt, "fom.n_saves": args.n_saves,
    }.items() if v is not None}
    cfg = load_config(args.config, overrides)
    _echo("simulate", {"fom": cfg.to_dict()["fom"], "output": args.output})
    snaps = pipeline.simulate(cfg)
    write_snapshots(snaps, args.output, args.format)
    print(f"wrote {snaps.K} snapshots (n={snaps.n}) to {args.output}")


def cmd_lift(args):
    _echo("lift", vars_of(args))
    snaps = read_snapshots(args.input)
    lmap = lifting.LiftingMap(args.kind, snaps.layout)
    lifted = lifting.lift_snapshots(lmap, snaps)
    write_snapshots(lifted, args.output, args.format)
    print(f"wrote lifted snapshots (n={lifted.n}) to {args.output}")


def cmd_basis(args):
    _echo("basis", vars_of(args))
    snaps = read_snapshots(args.input)
    if args.t_max is not None:
        snaps = snaps.select(snaps.times <= args.t_max + 1e-12)
    if args.center_scale:
        scaled, record = pod.center_scale(snaps)
    else:
        scaled, record = snaps, pod.ScalingRecord.identity(snaps.layout)
    basis = pod.pod_basis(scaled, args.r, args.method, n_singular=args.n_singular,
                          oversample=args.oversample, power_iters=args.power_iters,
                          seed=args.seed, scaling=record)
    pod.write_basis(basis, args.output)
    eta, lb = pod.energy_retained(basis.singular_values, basis.r, basis.K_total,
                                  basis.total_energy)
    print(f"wrote rank-{basis.r} basis to {args.output}; eta={eta:.6f}, lower bound={lb:.6f}")


def cmd_train(args):
    _echo("train", vars_of(args))
    basis, snaps, S, Sdot = _load_training(args)
    form = _form(args)
    forcing = _forcing(args)
    if form.inputs and forcing is None:
        raise ValueError("--input requires --forcing-amplitude/--forcing-frequency")
    inputs = forcing(snaps.times)[None] if form.inputs else None
    model = opinf.infer(S, Sdot, inputs, form, opinf.RegWeights(args.gamma1, args.gamma2),
                        basis.fingerprint())
    opinf.write_model(model, args.output)
    print(f"wrote r={model.r} model to {args.output} (rank {model.rank}, "
          f"condition {model.cond:.3e})")


def cmd_tune(args):
    _echo("tune", vars_of(args))
    basis, snaps, S, Sdot = _load_training(args)
    form = _form(args)
    t = snaps.times
    plan = tuning.RegularizationPlan(
        training_horizon=args.training_horizon or (t[-1] - t[0]),
        trial_horizon=args.trial_horizon or (t[-1] - t[0]),
        gamma1_bounds=tuple(args.gamma1_bounds), gamma1_count=args.gamma1_count,
        gamma2_bounds=tuple(args.gamma2_bounds), gamma2_count=args.gamma2_count,
        growth_factor=args.growth_factor)
    result = tuning.tune(plan, S, Sdot, t, form, _forcing(args), args.scheme, args.substeps,
                         basis.fingerprint())
    result.write_csv(args.ledger)
    opinf.write_model(result.model, args.output)
    rec = result.chosen_record
    print(f"chosen gamma1={rec.gamma1:.6g} gamma2={rec.gamma2:.6g} "
          f"(training error {rec.training_error:.3e}); ledger in {args.ledger}")


def cmd_predict(args):
    _echo("predict", vars_of(args))
    model = opinf.read_model(args.model)
    basis = pod.read_basis(args.basis)
    if model.r != basis.r:
        raise DimensionError(f"model has r={model.r} but basis has r={basis.r}")
    init = read_snapshots(args.initial)
    if init.n != basis.n:
        raise DimensionError(f"initial snapshot has n={init.n}, basis has n={basis.n}")
    column = init.select(slice(args.column, args.column + 1))
    S0, _ = pod.encode(basis, column)
    t0 = column.times[0] if args.t0 is None else args.t0
    traj = rom.integrate(model, S0[:, 0], t0, args.t1, args.dt, args.scheme, _forcing(args),
                         args.save_every)
    write_snapshots(pipeline.reduced_snapshots(traj), args.output, args.format)
    if args.reconstruct:
        recon = pod.reconstruct(basis, traj.coefficients, traj.times)
        write_snapshots(recon, args.reconstruct, args.format)
    status = f"diverged at step {traj.diverged_step}" if traj.diverged else "completed"
    print(f"integration {status}; wrote {traj.coefficients.shape[1]} states to {args.output}")
    if traj.diverged:
        raise DivergenceError(f"reduced model diverged at step {traj.diverged_step}")


def cmd_evaluate(args):
    _echo("evaluate", vars_of(args))
    ref = read_snapshots(args.reference)
    pred = read_snapshots(args.prediction)
    ev = pipeline.evaluate(ref, pred, args.variable, args.probes)
    pipeline.write_evaluation(ev, args.output)
    print(f"relative error {ev.frobenius_error:.6e}; min correlation "
          f"{np.nanmin(ev.correlation):.6f}; wrote {args.output}")


def cmd_pipeline(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["io.out_dir"] = args.out_dir
    cfg = load_config(args.config, overrides)
    print("[pipeline] effective configuration:")
    print(cfg.dump())
    summary = pipeline.run(cfg)
    for key, value in summary.items():
        if key != "paths":
            print(f"{key}: {value}")


def vars_of(args):
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liftlearn", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for every randomized component")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = dict(choices=["binary", "csv"], default=None,
               help="file format (default: from suffix, .csv or binary)")

    p = sub.add_parser("simulate", help="run a full-order solver")
    p.add_argument("--config")
    p.add_argument("--kind", choices=["cubic_reaction_diffusion", "viscous_burgers"])
    p.add_argument("--n-x", type=int)
    p.add_argument("--diffusivity", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--n-saves", type=int)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lift", help="apply a lifting map to snapshot data")
    p.add_argument("input")
    p.add_argument("--kind", choices=list(lifting.KINDS), default="cubic_rd")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("basis", help="center/scale snapshots and compute a POD basis")
    p.add_argument("input")
    p.add_argument("-r", type=int, required=True)
    p.add_argument("--method", choices=["thin_svd", "randomized"], default="thin_svd")
    p.add_argument("--n-singular", type=int)
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--power-iters", type=int, default=2)
    p.add_argument("--center-scale", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--t-max", type=float, help="use snapshots with t <= t_max")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_basis)

    for name, helptext in (("train", "infer reduced operators"),
                           ("tune", "grid-search the regularization weights")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--basis", required=True)
        p.add_argument("--snapshots", required=True)
        p.add_argument("--t-max", type=float, help="use snapshots with t <= t_max")
        _add_form_flags(p)
        _add_forcing_flags(p)
        p.add_argument("-o", "--output", required=True)
        if name == "train":
            p.add_argument("--gamma1", type=float, default=0.0)
            p.add_argument("--gamma2", type=float, default=0.0)
            p.set_defaults(func=cmd_train)
        else:
            p.add_argument("--gamma1-bounds", type=float, nargs=2, default=[1.0, 1e7])
            p.add_argument("--gamma1-count", type=int, default=15)
            p.add_argument("--gamma2-bounds", type=float, nargs=2, default=[1e10, 1e18])
            p.add_argument("--gamma2-count", type=int, default=9)
            p.add_argument("--growth-factor", type=float, default=1.2)
            p.add_argument("--training-horizon", type=float)
            p.add_argument("--trial-horizon", type=float)
            p.add_argument("--scheme", choices=list(rom.SCHEMES), default="rk2_heun")
            p.add_argument("--substeps", type=int, default=1)
            p.add_argument("--ledger", required=True, help="CSV of every candidate")
            p.set_defaults(func=cmd_tune)

    p = sub.add_parser("predict", help="integrate a reduced model")
    p.add_argument("--model", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--initial", required=True, help="snapshot file holding the initial state")
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--t0", type=float)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--scheme", choices=list(rom.SCHEMES), default="rk2_heun")
    p.add_argument("--save-every", type=int, default=1)
    _add_forcing_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--reconstruct", help="also write full-order reconstructed states here")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="compare a prediction with reference data")
    p.add_argument("--reference", required=True)
    p.add_argument("--prediction", required=True)
    p.add_argument("--variable", help="variable name or index (default: first); binary files "
                   "carry no names, so their variables are var0, var1, ...")
    p.add_argument("--probes", type=int, nargs="*", default=[0])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the whole chain from one config file")
    p.add_argument("config")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_pipeline)
    return parser


def _exit_code(exc):
    if isinstance(exc, ConfigError):
        return 2, "config"
    if isinstance(exc, FileNotFoundError):
        return 3, "file-not-found"
    if isinstance(exc, (FormatError, DimensionError)):
        return 4, "dimension" if isinstance(exc, DimensionError) else "format"
    if isinstance(exc, (DivergenceError, NoFeasibleRegularization)):
        return 5, "numerical"
    if isinstance(exc, (ValueError, KeyError)):
        return 4, "invalid-input"
    return 1, "error"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("OPINF_THREADS")
    if threads:
        log.debug("worker threads capped at %s", threads)
    if args.command == "basis" and args.seed is None:
        args.seed = 0
    try:
        for key in ("output", "reconstruct", "ledger"):
            target = getattr(args, key, None)
            if target:
                Path(target).parent.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - categorized for the exit status
        code, category = _exit_code(exc)
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error [{category}]: {msg}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
