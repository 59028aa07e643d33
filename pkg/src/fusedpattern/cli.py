"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys

import numpy as np

from . import errors
from .experiments import ExperimentConfig, recovery_probability, write_sweep_csv
from .flsa import apply_lambda1, flsa_path
from .ic import ic_magnitudes, structural_ic, support_from_signal, theorem1_bound
from .design import centered_design_dense
from .puffer import preconditioned_fit, precondition_scores, theorem6_bound
from .signal_model import (paper_signal, read_blocks_csv, read_sequence_csv,
                           sample_noisy, write_sequence_csv)

SEED_ENV = "FUSEDPATTERN_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _nonneg(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return x


def _positive(text):
    x = _nonneg(text)
    if x == 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text}")
    return x


def _count(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return k


def _sigma_list(text):
    return [_positive(t) for t in text.split(",") if t.strip()]


def _default_seed():
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {value!r}") from None


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _signal(path):
    return paper_signal() if path is None else read_blocks_csv(path)


def cmd_fit(args):
    y = read_sequence_csv(args.input)
    mu = apply_lambda1(flsa_path(y).fit(args.lambda2), args.lambda1)
    with _open_out(args.output) as fh:
        write_sequence_csv(mu, fh)


def cmd_precondition(args):
    y = read_sequence_csv(args.input)
    fit = preconditioned_fit(y, args.lam)
    with _open_out(args.output) as fh:
        write_sequence_csv(fit.mu_hat, fh)
    if args.breakpoints:
        with _open_out(args.breakpoints) as fh:
            _write_breakpoints(precondition_scores(y), fh)


def _write_breakpoints(w, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["rank", "lambda", "boundary"])
    order = np.argsort(-np.abs(w), kind="stable")
    for rank, i in enumerate(order, start=1):
        writer.writerow([rank, repr(float(abs(w[i]))), int(i) + 1])


def cmd_path(args):
    y = read_sequence_csv(args.input)
    with _open_out(args.output) as fh:
        if args.method == "preconditioned":
            _write_breakpoints(precondition_scores(y), fh)
            return
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", "boundary"])
        for event in flsa_path(y).merge_events:
            for p in event.positions:
                writer.writerow([repr(event.lam), p + 1])


def cmd_check_ic(args):
    jumps = support_from_signal(read_blocks_csv(args.signal))
    if jumps.s == 0:
        raise errors.InvalidInputError("signal has no jumps")
    report = ic_magnitudes(jumps).to_dict()
    verdict = structural_ic(jumps)
    report["structural"] = {"strong_holds": verdict.strong_holds,
                            "holds": verdict.ic_holds}
    with _open_out(args.output) as fh:
        fh.write(json.dumps(report, indent=2) + "\n")


def cmd_simulate(args):
    signal = read_blocks_csv(args.signal)
    stream = () if args.replicate is None else (args.replicate,)
    draw = sample_noisy(signal, args.sigma, args.seed, stream)
    with _open_out(args.output) as fh:
        write_sequence_csv(draw.values, fh)


def cmd_sweep(args):
    config = ExperimentConfig(_signal(args.signal), tuple(args.sigmas), args.reps,
                              args.seed, args.method)
    result = recovery_probability(config, workers=args.workers)
    with _open_out(args.output) as fh:
        write_sweep_csv(result.table(), fh)
    if args.json:
        with _open_out(args.json) as fh:
            fh.write(result.to_json() + "\n")


def cmd_bound(args):
    digits = args.digits
    if args.theorem == 6:
        if args.sigma is None or (args.n is None and args.signal is None):
            raise UsageError("bound --theorem 6 needs --sigma and --n (or --signal)")
        signal = read_blocks_csv(args.signal) if args.signal else None
        n = args.n if args.n is not None else signal.n
        bound = theorem6_bound(args.lam, args.sigma, n, signal)
        print(f"{bound.probability:.{digits}f}")
        if signal is not None:
            print(f"condition_ok={str(bound.condition_ok).lower()}")
        return
    if args.signal is None or args.lambda_max is None:
        raise UsageError("bound --theorem 1 needs --signal and --lambda-max")
    signal = read_blocks_csv(args.signal)
    jumps = support_from_signal(signal)
    if jumps.s == 0:
        raise errors.InvalidInputError("signal has no jumps")
    eta = args.eta
    if eta is None:
        eta = ic_magnitudes(jumps).eta
        if not eta > 0:
            raise errors.InvalidInputError(
                "irrepresentable condition fails for this signal (eta <= 0)")
    theta = np.diff(signal.mu())
    b = theorem1_bound(centered_design_dense(signal.n), theta, args.lam,
                       args.lambda_max, eta)
    print(f"condition_ok={str(b.condition_ok).lower()}")
    print(f"psi={b.psi:.{digits}f}")
    print(f"probability={b.probability:.{digits}f}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusedpattern",
                     description="Pattern recovery for blocky signals with the fused Lasso.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="FLSA fit of a sequence CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda1", type=_nonneg, default=0.0)
    p.add_argument("--lambda2", type=_nonneg, required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("precondition", help="preconditioned fused Lasso fit")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--breakpoints", help="write path breakpoints to this CSV")
    p.set_defaults(func=cmd_precondition)

    p = sub.add_parser("path", help="merge events (flsa) or breakpoints (preconditioned)")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["flsa", "preconditioned"], default="flsa")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("check-ic", help="irrepresentable-condition report for a blocks CSV")
    p.add_argument("--signal", required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_check_ic)

    p = sub.add_parser("simulate", help="noisy draw from a blocks CSV")
    p.add_argument("--signal", required=True)
    p.add_argument("--sigma", type=_nonneg, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicate", type=int, default=None,
                   help="replicate index; selects an independent stream")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="recovery probability over a sigma grid")
    p.add_argument("--signal", help="blocks CSV (default: the 430-point benchmark)")
    p.add_argument("--sigmas", type=_sigma_list, default=[0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4])
    p.add_argument("--reps", type=_count, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--method", choices=["preconditioned", "flsa"], default="preconditioned")
    p.add_argument("--workers", type=_count, default=1)
    p.add_argument("--output", default="-")
    p.add_argument("--json", help="also write the full result (with per-replicate flags)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="theoretical sign-recovery bounds")
    p.add_argument("--theorem", type=int, choices=[1, 6], default=6)
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--sigma", type=_positive)
    p.add_argument("--n", type=_count)
    p.add_argument("--signal")
    p.add_argument("--lambda-max", type=_nonneg,
                   help="largest eigenvalue of the noise covariance (theorem 1)")
    p.add_argument("--eta", type=_positive, help="IC margin (theorem 1; default: computed)")
    p.add_argument("--digits", type=int, default=4)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if args.command == "sweep" and not args.sigmas:
            raise UsageError("--sigmas is empty")
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (errors.InvalidInputError, errors.InvalidParameterError,
            errors.SingularityError, errors.RankDeficiencyError,
            errors.InvalidSetupError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


run = main

if __name__ == "__main__":
    sys.exit(main())
