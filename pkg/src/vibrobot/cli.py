"""Command-line entry point.

Settings are resolved as: command-line flags, then keys from ``--config``,
then built-in defaults. Exit status is 0 on success, 1 on a usage error and
2 when a run fails (bad config file, blown-up integration, diverged
controller, unwritable output).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .controller import ControllerDivergence
from .harness import (DEFAULT_SWEEP_VALUES, NOMINAL_SPEED, SweepSpec, TrackSpec, emit_outputs,
                      run_sweep, run_tracking)
from .identifier import jacobian_check, linear_plant_demo
from .mlp import gradient_check
from .params import ConfigError, RobotParams, SimConfig, load_config, with_overrides
from .sim import Drive, IntegrationError, run_open_loop

TRACK_DURATION = 10.0
GRADCHECK_TOL_MLP = 1e-4
GRADCHECK_TOL_IDENT = 1e-6


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def voltage_pair(text):
    values = float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two voltages V_e,V_d, got {text!r}")
    return values


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value settings file")
    common.add_argument("--out", metavar="DIR", help="directory for CSV, SVG and metadata files")
    common.add_argument("--seed", type=int, help="seed for the network weight initialization")
    common.add_argument("--duration", type=float, metavar="S", help="simulated time in seconds")
    common.add_argument("--no-plots", action="store_true", help="skip the SVG plots")

    parser = Parser(prog="vibrobot", description="Vibration-driven robot simulator.")
    sub = parser.add_subparsers(dest="command", parser_class=Parser)

    p = sub.add_parser("openloop", parents=[common], help="constant-drive run from rest")
    drive = p.add_mutually_exclusive_group()
    drive.add_argument("--omega", type=float, metavar="RAD_S",
                       help=f"rotor speed for both motors (default {NOMINAL_SPEED})")
    drive.add_argument("--voltages", type=voltage_pair, metavar="VE,VD",
                       help="motor voltages instead of a fixed speed")

    p = sub.add_parser("sweep", parents=[common], help="open-loop runs over k or mu")
    p.add_argument("--param", choices=sorted(DEFAULT_SWEEP_VALUES), required=True)
    p.add_argument("--values", type=float_list, help="comma-separated, strictly increasing")
    p.add_argument("--omega", type=float, default=NOMINAL_SPEED, metavar="RAD_S")
    p.add_argument("--workers", type=int, help="upper bound on parallel runs")

    p = sub.add_parser("track", parents=[common], help="closed-loop step tracking")
    p.add_argument("--xd", type=float, default=0.02, help="translation reference, m")
    p.add_argument("--phid", type=float, default=0.0, help="rotation reference, rad")

    p = sub.add_parser("gradcheck", parents=[common],
                       help="finite-difference checks of the network derivatives")
    p.add_argument("--seeds", type=int, default=20, help="number of random networks")

    sub.add_parser("ident-demo", parents=[common],
                   help="identifier convergence on a synthetic linear plant")
    return parser


def resolve_settings(args, default_duration):
    """``(config, params, duration)`` with flags over config-file keys over defaults."""
    config, params = SimConfig(), RobotParams()
    seen = set()
    if args.config:
        config, params = load_config(args.config, seen)
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.duration is not None:
        overrides["duration"] = args.duration
    elif "duration" not in seen:
        overrides["duration"] = default_duration
    config, params = with_overrides(config, params, **overrides)
    return config, params, config.duration


def write_outputs(args, result):
    if args.out:
        for path in emit_outputs(result, args.out, plots=not args.no_plots):
            print(f"wrote {path}")


def write_text(args, name, text):
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / name).write_text(text)
        except OSError as err:
            raise OSError(f"cannot write {str(out / name)!r}: {err.strerror}") from None
        print(f"wrote {out / name}")


def cmd_openloop(args):
    config, params, duration = resolve_settings(args, SimConfig().duration)
    if args.voltages is not None:
        drive = Drive.voltages(*args.voltages)
    else:
        drive = Drive.speeds(NOMINAL_SPEED if args.omega is None else args.omega)
    trace = run_open_loop(config, params, drive, duration)
    print(f"final X = {trace.final('X'):.6g} m, Y = {trace.final('Y'):.6g} m, "
          f"phi = {trace.final('phi'):.6g} rad")
    write_outputs(args, trace)
    return 0


def cmd_sweep(args):
    config, params, duration = resolve_settings(args, SimConfig().duration)
    values = args.values if args.values else DEFAULT_SWEEP_VALUES[args.param]
    spec = SweepSpec(args.param, values, Drive.speeds(args.omega), duration)
    result = run_sweep(spec, config, params, max_workers=args.workers)
    print(result.table())
    write_outputs(args, result)
    return 2 if any(row.error for row in result.rows) else 0


def cmd_track(args):
    config, params, duration = resolve_settings(args, TRACK_DURATION)
    result = run_tracking(TrackSpec(args.xd, args.phid, duration), config, params)
    print(result.table())
    write_outputs(args, result)
    return 0


def cmd_gradcheck(args):
    if args.seeds < 1:
        raise UsageError("vibrobot gradcheck: error: --seeds must be >= 1")
    base = 0 if args.seed is None else args.seed
    seeds = range(base, base + args.seeds)
    mlp_err = max(gradient_check(s) for s in seeds)
    ident_err = max(jacobian_check(s) for s in seeds)
    ok = mlp_err <= GRADCHECK_TOL_MLP and ident_err <= GRADCHECK_TOL_IDENT
    text = (f"mlp backward: max relative error {mlp_err:.3e} over {args.seeds} seeds "
            f"(tolerance {GRADCHECK_TOL_MLP:g})\n"
            f"identifier jacobian: max relative error {ident_err:.3e} over {args.seeds} seeds "
            f"(tolerance {GRADCHECK_TOL_IDENT:g})\n")
    print(text, end="")
    write_text(args, "gradcheck.txt", text)
    return 0 if ok else 2


def cmd_ident_demo(args):
    seed = 0 if args.seed is None else args.seed
    J, mse, power = linear_plant_demo(seed)
    text = (f"plant y(k) = 0.5 u(k-1), 5000 steps, eta = 0.01, seed {seed}\n"
            f"final Jacobian estimate {J:.4f}\n"
            f"mean-square prediction error {mse:.3e} ({100 * mse / power:.3f}% of output power)\n")
    print(text, end="")
    write_text(args, "ident_demo.txt", text)
    return 0


COMMANDS = {
    "openloop": cmd_openloop,
    "sweep": cmd_sweep,
    "track": cmd_track,
    "gradcheck": cmd_gradcheck,
    "ident-demo": cmd_ident_demo,
}


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except (ConfigError, IntegrationError, ControllerDivergence, OSError, ValueError) as err:
        print(f"vibrobot: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
