"""Command-line front end.

Subcommands: ``sample``, ``sweep``, ``validate`` and ``envelope``.
Exit codes: 0 success, 1 a check failed, 2 invalid arguments, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import os
import sys

from . import sweep as sweep_mod
from .baselines import BASELINES, MethodId, check_domain, log_hat, rou_boundary_check, sample
from .errors import DomainError
from .gamma_core import GammaParams, build_proposal, log_target
from .rng import seed_stream
from .stats import envelope_check, gamma_quantile, goodness_of_fit

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
MIN_VALIDATE_N = 1000
MIN_SWEEP_N = 1000


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _method(text: str) -> MethodId:
    try:
        return MethodId.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _methods(text: str) -> list[MethodId]:
    if text.strip().lower() == "all":
        return list(MethodId)
    return [_method(t) for t in text.split(",") if t.strip()]


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc}") from exc
    with fh:
        yield fh


def _check_sampling_args(method: MethodId, alpha: float, beta: float, n: int) -> None:
    if n < 1:
        raise UsageError("--n must be positive")
    try:
        check_domain(method, alpha, beta)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
#  Subcommands
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    _check_sampling_args(args.method, args.alpha, args.beta, args.n)
    src = seed_stream(args.seed)
    batch = sample(args.method, args.alpha, args.beta, src, args.n)
    buf = io.StringIO()
    for v in batch.values:
        buf.write(f"{v:.17g}\n")
    buf.write(
        f"# method={args.method.name} alpha={args.alpha:.9g} beta={args.beta:.9g} "
        f"n={args.n} proposed={batch.proposed} accepted={batch.accepted} "
        f"empirical_ar={batch.empirical_ar:.9g} seed={args.seed}\n"
    )
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not 1.0 <= args.alpha_min < args.alpha_max:
        raise UsageError("need 1 <= --alpha-min < --alpha-max")
    if not args.alpha_step > 0.0:
        raise UsageError("--alpha-step must be positive")
    if args.n < MIN_SWEEP_N:
        raise UsageError(f"--n must be at least {MIN_SWEEP_N}")
    if not args.beta > 0.0:
        raise UsageError("--beta must be positive")
    grid = sweep_mod.alpha_grid(args.alpha_min, args.alpha_max, args.alpha_step)
    records = sweep_mod.run_sweep(grid, args.methods, args.n, args.seed, args.beta, args.workers)
    with _output(args.out) as fh:
        sweep_mod.write_csv(records, fh)
    if args.plot_data:
        with _output(args.plot_data) as fh:
            sweep_mod.write_plot_data(records, fh)

    # re-check what was written, not what is in memory
    if args.out not in (None, "-"):
        with open(args.out, encoding="utf-8") as fh:
            records = sweep_mod.read_csv(fh)
    bad = sweep_mod.ar_violations(records, args.check_tolerance)
    for r in bad:
        print(
            f"warning: {r.method.name} alpha={r.alpha:.9g} empirical_ar={r.empirical_ar:.9g} "
            f"differs from {r.ar_source} value {r.theoretical_ar:.9g} by >= {args.check_tolerance}",
            file=sys.stderr,
        )
    return EXIT_FAIL if bad else EXIT_OK


def cmd_validate(args) -> int:
    if args.n < MIN_VALIDATE_N:
        raise UsageError(f"--n must be at least {MIN_VALIDATE_N}")
    _check_sampling_args(args.method, args.alpha, args.beta, args.n)
    assume_alpha = args.alpha if args.assume_alpha is None else args.assume_alpha
    assume_beta = args.beta if args.assume_beta is None else args.assume_beta
    try:
        reference = GammaParams(assume_alpha, assume_beta)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    batch = sample(args.method, args.alpha, args.beta, seed_stream(args.seed), args.n)
    report = goodness_of_fit(batch.values, reference)
    print(f"method={args.method.name}")
    print(f"alpha={args.alpha:.9g}")
    print(f"beta={args.beta:.9g}")
    print(f"assume_alpha={assume_alpha:.9g}")
    print(f"assume_beta={assume_beta:.9g}")
    print(f"seed={args.seed}")
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_envelope(args) -> int:
    if args.grid_size < 1000:
        raise UsageError("--grid-size must be at least 1000")
    try:
        check_domain(args.method, args.alpha, args.beta)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if args.method in BASELINES and args.beta != 1.0:
        raise UsageError("baseline hats are defined at unit rate; use --beta 1")
    params = GammaParams(args.alpha, args.beta)
    if args.method is MethodId.M5_ROU:
        report = rou_boundary_check(args.alpha, max(args.grid_size, 1000))
    else:
        x_hi = gamma_quantile(params, 1.0 - 1e-6)
        if args.method is MethodId.M1:
            focus = [build_proposal(params).contact_point]
        else:
            focus = [args.alpha - 1.0, args.alpha]
        report = envelope_check(
            lambda x: log_target(params, x),
            log_hat(args.method, args.alpha, args.beta),
            0.0, x_hi, args.grid_size, focus,
        )
    print(f"method={args.method.name}")
    print(f"alpha={args.alpha:.9g}")
    print(f"beta={args.beta:.9g}")
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
#  Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gammagen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, n_default):
        p.add_argument("--method", type=_method, default=MethodId.M1, help="m1..m5 (default m1)")
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--n", type=int, default=n_default)
        p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("sample", help="write variates, one per line")
    add_common(p, 1000)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="acceptance-rate sweep as CSV")
    p.add_argument("--alpha-min", type=float, default=1.0)
    p.add_argument("--alpha-max", type=float, default=30.0)
    p.add_argument("--alpha-step", type=float, default=sweep_mod.DEFAULT_STEP)
    p.add_argument("--n", type=int, default=sweep_mod.DEFAULT_N)
    p.add_argument("--methods", type=_methods, default=list(MethodId), help="comma list or 'all'")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--plot-data", default=None, help="also write a wide per-alpha table here")
    p.add_argument("--check-tolerance", type=float, default=sweep_mod.AR_TOLERANCE)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="KS and moment checks of generated samples")
    add_common(p, 100_000)
    p.add_argument("--assume-alpha", type=float, default=None, help="shape of the reference CDF")
    p.add_argument("--assume-beta", type=float, default=None, help="rate of the reference CDF")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("envelope", help="grid check that the hat dominates the target")
    p.add_argument("--method", type=_method, default=MethodId.M1)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--grid-size", type=int, default=10_000)
    p.set_defaults(func=cmd_envelope)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gammagen {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gammagen {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
