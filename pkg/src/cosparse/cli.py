"""Command line interface: ``cosparse <subcommand> [flags]``.

Exit codes are 0 on success, 1 on a domain failure (a falsified null space
property, a solver that ran out of iterations, a degenerate frame or draw)
and 2 on usage or input errors. Errors are reported on standard error as one line of JSON with keys
``code`` and ``message``. The seed comes from ``--seed``, else the
``COSPARSE_SEED`` environment variable, else fresh entropy; it is always
echoed on standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bounds as bd
from . import geometry as geo
from .errors import CosparseError
from .experiments import ExperimentConfig, phase_curve
from .frames import frame_with_ratio, tight_frame
from .io import (dumps, frame_meta, load_frame, load_matrix, load_vector, save_frame,
                 save_matrix, write_json, write_rows, FMT)
from .model import gaussian_instance, synth_cosparse
from .nsp import Variant, nsp_check
from .solver import TRACE_COLUMNS, SolverOptions, solve_abp, solve_abpdn

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
SEED_ENV = "COSPARSE_SEED"


class UsageError(Exception):
    code = "usage"


def _error_line(code: str, message: str) -> str:
    return json.dumps({"code": code, "message": message})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(_error_line("usage", message), file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=_seed_arg, default=None, help="RNG seed (64-bit unsigned)")
    g.add_argument("--out", default=None, help="output path")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--quiet", action="store_true", help="suppress warnings and logs")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="cosparse", description="Cosparse recovery toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)

    p = sub.add_parser("frame", parents=[common], help="draw or check a frame")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--tight", action="store_true", help="random Parseval frame")
    kind.add_argument("--ratio", type=float, help="random frame with this B/A")
    kind.add_argument("--check", metavar="CSV", help="report the bounds of a saved frame")
    p.add_argument("--p", type=int)
    p.add_argument("--d", type=int)

    p = sub.add_parser("signal", parents=[common],
                       help="draw a cosparse signal and optionally measurements")
    p.add_argument("--frame", required=True)
    p.add_argument("--s", type=int, required=True, help="analysis sparsity p - l")
    p.add_argument("--m", type=int, help="number of Gaussian measurements")
    p.add_argument("--eta", type=float, default=0.0)

    p = sub.add_parser("solve", parents=[common], help="analysis l1 recovery")
    p.add_argument("--frame", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--trace", metavar="CSV", help="write the per-iteration trace here")
    p.add_argument("--max-iters", type=int, default=SolverOptions.max_iters)
    p.add_argument("--tol-gap", type=float, default=SolverOptions.tol_gap,
                   help="certificate gap accepted as optimal")

    p = sub.add_parser("bounds", parents=[common], help="measurement bounds")
    for name in ("--A", "--B"):
        p.add_argument(name, type=float, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--m", type=int, help="m for E_m (default: m_nonuniform)")
    p.add_argument("--sigma", type=float, default=0.0, help="sigma_s(Omega x)_1 for error bounds")

    p = sub.add_parser("width", parents=[common], help="Monte-Carlo Gaussian widths")
    p.add_argument("--set", dest="set_name", choices=("D", "polar", "escape"), required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--d", type=int, help="ambient dimension (escape)")
    p.add_argument("--m", type=int, help="measurements (escape)")
    p.add_argument("--t", type=float, default=2.0, help="deviation (escape)")
    p.add_argument("--dirs", type=int, default=200, help="descent directions (escape)")
    p.add_argument("--trials", type=int, default=200, help="matrix draws (escape)")

    p = sub.add_parser("nsp", parents=[common], help="falsify a null space property")
    p.add_argument("--matrix", required=True)
    p.add_argument("--frame", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="plain")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--tau", type=float)

    p = sub.add_parser("phase", parents=[common], help="phase-transition sweep")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--full", action="store_true", help="use d=200, p=250")
    p.add_argument("--threads", type=int)
    return parser


# ---------------------------------------------------------------------------
# output


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    else:
        yield prefix[:-1], obj


def _csv_value(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return str(v)


def render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(payload) + "\n"
    lines = []
    for key, value in _flatten(payload):
        values = value if isinstance(value, (list, tuple)) else [value]
        lines.append(",".join([key] + [_csv_value(v) for v in values]))
    return "\n".join(lines) + "\n"


def _emit(args, payload: dict, to_out: bool = True):
    text = render(payload, args.format)
    if to_out and args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_frame(args, seed):
    if args.check:
        frame = load_frame(args.check)
        payload = frame_meta(frame) | {"ratio": frame.ratio, "tight": frame.is_tight}
        _emit(args, payload)
        return EXIT_OK
    if args.p is None or args.d is None:
        raise UsageError("frame generation needs --p and --d")
    rng = _rng(seed)
    frame = tight_frame(args.p, args.d, rng, seed=seed)
    if args.ratio is not None:
        frame = frame_with_ratio(frame, args.ratio, rng)
    payload = frame_meta(frame) | {"ratio": frame.ratio, "tight": frame.is_tight}
    if args.out:
        save_frame(args.out, frame)
        sys.stdout.write(render(payload, args.format))
    elif args.format == "csv":
        np.savetxt(sys.stdout, frame.omega, fmt=FMT, delimiter=",")
    else:
        _emit(args, payload | {"omega": frame.omega.tolist()})
    return EXIT_OK


def cmd_signal(args, seed):
    frame = load_frame(args.frame)
    if not 1 <= args.s <= frame.p:
        raise UsageError(f"need 1 <= s <= p, got s={args.s}")
    rng = _rng(seed)
    signal = synth_cosparse(frame, frame.p - args.s, rng)
    meta = {"seed": seed, "cosparsity": signal.cosparsity,
            "cosupport": signal.cosupport.tolist()}
    payload = {"x": signal.x.tolist()} | meta
    inst = None
    if args.m is not None:
        inst = gaussian_instance(frame, signal, args.m, args.eta, rng)
        payload |= {"M": inst.M.tolist(), "y": inst.y.tolist(), "eta": inst.eta}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_matrix(out / "x.csv", signal.x, meta)
        if inst is not None:
            inst_meta = {"seed": seed, "m": inst.m, "eta": inst.eta}
            save_matrix(out / "M.csv", inst.M, inst_meta)
            save_matrix(out / "y.csv", inst.y, inst_meta)
        sys.stdout.write(render(meta, args.format))
    else:
        _emit(args, payload)
    return EXIT_OK


def cmd_solve(args, seed):
    frame = load_frame(args.frame)
    M = load_matrix(args.matrix)
    y = load_vector(args.y)
    opts = SolverOptions(max_iters=args.max_iters, tol_gap=args.tol_gap,
                         trace=args.trace is not None)
    if args.eta > 0:
        res = solve_abpdn(frame, M, y, args.eta, opts)
    else:
        res = solve_abp(frame, M, y, opts)
    if args.trace:
        rows = [(int(r[0]),) + tuple(float(v) for v in r[1:]) for r in res.trace]
        write_rows(args.trace, TRACE_COLUMNS, rows)
    if args.out:
        save_matrix(args.out, res.z, {"seed": seed, "status": str(res.status)})
    if args.format == "csv" and not args.out:
        np.savetxt(sys.stdout, res.z[:, None], fmt=FMT, delimiter=",")
    else:
        sys.stdout.write(render(res.as_dict(), args.format))
    return EXIT_OK if res.converged else EXIT_DOMAIN


def cmd_bounds(args, seed):
    q = bd.BoundQuery(A=args.A, B=args.B, s=args.s, p=args.p, eps=args.eps,
                      rho=args.rho, tau=args.tau, eta=args.eta)
    m_non = bd.m_nonuniform(q)
    m = args.m if args.m is not None else m_non
    payload = {
        "m_nonuniform": m_non,
        "m_uniform": bd.m_uniform(q),
        "m_nonuniform_noisy": bd.m_nonuniform_noisy(q)._asdict(),
        "m_uniform_robust": (bd.m_uniform_robust(q)._asdict() if q.tau > 1 else None),
        "e_m": {"m": m, "value": bd.e_m(m)},
        "error_bounds": bd.error_bounds(q, args.sigma, m),
    }
    _emit(args, payload)
    return EXIT_OK


def cmd_width(args, seed):
    rng = _rng(seed)
    if args.set_name == "D":
        est = geo.width_D_mc(args.p, args.s, args.samples, rng)
        payload = {"mean": est.mean, "std_err": est.std_err,
                   "bound": geo.width_bound_D(args.s, args.p)}
    elif args.set_name == "polar":
        support = np.sort(rng.choice(args.p, args.s, replace=False))
        signs = rng.choice([-1.0, 1.0], args.s)
        est = geo.width_polar_mc(support, signs, args.p, args.samples, rng)
        payload = {"mean": est.mean, "std_err": est.std_err,
                   "bound": geo.width_bound_cone(args.s, args.p)}
    else:
        if args.d is None or args.m is None:
            raise UsageError("--set escape needs --d and --m")
        frame = tight_frame(args.p, args.d, rng, seed=seed)
        signal = synth_cosparse(frame, args.p - args.s, rng)
        res = geo.escape_check(frame, signal, args.m, args.t, args.dirs, args.trials, rng,
                               n_width_samples=args.samples)
        payload = {"mean": res.frequency, "std_err": res.std_err, "bound": res.bound,
                   "threshold": res.threshold, "width": res.width.mean}
    _emit(args, payload | {"seed": seed})
    return EXIT_OK


def cmd_nsp(args, seed):
    frame = load_frame(args.frame)
    M = load_matrix(args.matrix)
    if M.shape[1] != frame.d:
        raise UsageError(f"matrix has {M.shape[1]} columns, frame has d={frame.d}")
    report = nsp_check(M, frame, args.s, args.rho, args.variant, args.samples,
                       _rng(seed), tau=args.tau)
    _emit(args, report.as_dict() | {"seed": seed})
    return EXIT_DOMAIN if report.falsified else EXIT_OK


def cmd_phase(args, seed):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {"master_seed": seed}
    if args.threads is not None:
        changes["threads"] = args.threads
    cfg = ExperimentConfig.from_dict({**cfg.__dict__, **changes})
    if args.full:
        cfg = cfg.full_scale()
    curve = phase_curve(cfg)
    payload = {"seed": seed, "m": curve.frontier_m, "max_s": curve.frontier,
               "max_s_raw": curve.frontier_raw, "ratio": curve.frame.ratio}
    if args.out:
        curve.write(args.out)
        write_json(Path(args.out) / "config.json", cfg.__dict__)
    sys.stdout.write(render(payload, args.format))
    return EXIT_OK


COMMANDS = {
    "frame": cmd_frame,
    "signal": cmd_signal,
    "solve": cmd_solve,
    "bounds": cmd_bounds,
    "width": cmd_width,
    "nsp": cmd_nsp,
    "phase": cmd_phase,
}


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if args.command == "phase" and args.config:
        data = json.loads(Path(args.config).read_text())
        if "master_seed" in data:
            return _seed_arg(str(data["master_seed"]))
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _seed_arg(env)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad {SEED_ENV}: {env!r}") from exc
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def dispatch(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_usage(sys.stderr)
        print(_error_line("usage", "a subcommand is required"), file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print(_error_line("usage", "a subcommand is required"), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            seed = resolve_seed(args)
            print(f"seed: {seed}", file=sys.stderr)
            return COMMANDS[args.command](args, seed)
    except UsageError as exc:
        print(_error_line(exc.code, str(exc)), file=sys.stderr)
    except CosparseError as exc:
        print(_error_line(exc.code, str(exc)), file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(_error_line(type(exc).__name__, str(exc)), file=sys.stderr)
    return EXIT_USAGE


def main(argv=None):
    sys.exit(dispatch(argv))
