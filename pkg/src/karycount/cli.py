"""Command-line surface: run, bench, calibrate, analyze, lowerbound.

Output is CSV with `#`-prefixed comment lines; every numeric field is
printed with round-trip precision so downstream comparisons are exact.
Exit codes: 0 success, 1 usage error, 2 data error, 3 bench acceptance
failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, lowerbound, noise
from .digits import DigitSystem
from .mechanisms import Mechanism, MechanismConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ACCEPT = 3

_VARIANTS = {
    "plain": DigitSystem.PLAIN,
    "offset-odd": DigitSystem.OFFSET_ODD,
    "offset-even": DigitSystem.OFFSET_EVEN,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("DP_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"DP_SEED must be an unsigned integer, got {env!r}")
        if seed < 0:
            raise UsageError(f"DP_SEED must be an unsigned integer, got {env!r}")
        return seed
    return 0


def _iter_bits(path: str):
    """Yield input bits one at a time; never holds the whole stream."""
    if path == "-":
        fh, close = sys.stdin, False
    else:
        try:
            fh, close = open(path), True
        except OSError as exc:
            raise DataError(f"cannot read input {path}: {exc}")
    try:
        for lineno, line in enumerate(fh, start=1):
            for token in line.split(","):
                token = token.strip()
                if not token:
                    continue
                if token not in ("0", "1"):
                    raise DataError(f"line {lineno}: expected '0' or '1', got {token!r}")
                yield int(token)
    finally:
        if close:
            fh.close()


def _read_bits(path: str) -> list[int]:
    return list(_iter_bits(path))


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def build_parser() -> _Parser:
    parser = _Parser(prog="karycount", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default: DP_SEED or 0)")

    run = sub.add_parser("run", help="stream private prefix sums")
    run.add_argument("--variant", choices=_VARIANTS, default="offset-odd")
    run.add_argument("--k", type=int, default=3)
    run.add_argument("--epsilon", type=float, default=1.0)
    run.add_argument("--T", type=int, default=None, help="stream length (default: input length)")
    run.add_argument("--input", default="-", help="bit file, '-' for stdin")
    run.add_argument("--output", default="-")
    run.add_argument("--with-true", action="store_true", help="emit true prefix sums (non-private)")
    run.add_argument("--zero-noise", action="store_true", help="testing hook: no noise (non-private)")
    add_seed(run)

    bench = sub.add_parser("bench", help="Monte-Carlo MSE vs closed form")
    bench.add_argument("--variant", choices=_VARIANTS, default="offset-odd")
    bench.add_argument("--k", type=int, default=3)
    bench.add_argument("--h", type=int, default=2)
    bench.add_argument("--epsilon", type=float, default=1.0)
    bench.add_argument("--trials", type=int, default=100000)
    bench.add_argument("--zero-noise", action="store_true")
    bench.add_argument("--output", default="-")
    add_seed(bench)

    cal = sub.add_parser("calibrate", help="noise calibration table")
    cal.add_argument("--delta1", type=float, default=None, help="l1-sensitivity")
    cal.add_argument("--delta2", type=float, default=None, help="l2-sensitivity")
    cal.add_argument("--epsilon", type=float, required=True)
    cal.add_argument("--delta", type=float, default=None)
    cal.add_argument("--output", default="-")

    ana = sub.add_parser("analyze", help="leading constants and crossover")
    ana.add_argument("mode", choices=["constants", "crossover"])
    ana.add_argument("--variant", choices=_VARIANTS, default="offset-odd")
    ana.add_argument("--k", type=int, default=19)
    ana.add_argument("--k-min", type=int, default=2)
    ana.add_argument("--k-max", type=int, default=99)
    ana.add_argument("--T", type=int, default=1 << 20)
    ana.add_argument("--epsilon", type=float, default=1.0)
    ana.add_argument("--delta", type=float, default=1e-6)
    ana.add_argument("--output", default="-")

    low = sub.add_parser("lowerbound", help="packing-argument simulation")
    low.add_argument("--T", type=int, required=True, help="stream length (perfect square, 4 | sqrt(T))")
    low.add_argument("--k", type=int, required=True, help="even flip count <= sqrt(T)/4")
    low.add_argument("--epsilon", type=float, default=1.0)
    low.add_argument("--trials", type=int, default=1000)
    low.add_argument("--zero-noise", action="store_true")
    low.add_argument("--output", default="-")
    add_seed(low)

    return parser


def cmd_run(args, out) -> int:
    variant = _VARIANTS[args.variant]
    seed = _resolve_seed(args.seed)
    if args.T is not None:
        # known horizon: stream the input, holding only the current bit
        T = args.T
        bits = _iter_bits(args.input)
    else:
        bits = _read_bits(args.input)
        if not bits:
            raise DataError("empty input stream")
        T = len(bits)
    try:
        cfg = MechanismConfig(
            variant=variant, k=args.k, T=T, epsilon=args.epsilon,
            seed=seed, zero_noise=args.zero_noise,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out.write(f"# seed={seed}\n")
    if args.zero_noise:
        out.write("# zero-noise: outputs are NOT private\n")
    if args.with_true:
        out.write("# with-true: true prefix sums included, NOT private\n")
    header = "t,estimate,true" if args.with_true else "t,estimate"
    out.write(header + "\n")
    out.flush()
    mech = Mechanism(cfg)
    true_sum = 0
    t = 0
    for bit in bits:
        t += 1
        if t > T:
            raise DataError(f"input longer than --T {T}")
        est = mech.feed(bit)
        true_sum += bit
        row = f"{t},{fmt(est)}"
        if args.with_true:
            row += f",{true_sum}"
        out.write(row + "\n")
        out.flush()
    if t == 0:
        raise DataError("empty input stream")
    return EXIT_OK


def cmd_bench(args, out) -> int:
    variant = _VARIANTS[args.variant]
    seed = _resolve_seed(args.seed)
    try:
        T = analysis.natural_max_T(variant, args.k, args.h)
        cfg = MechanismConfig(
            variant=variant, k=args.k, T=T, epsilon=args.epsilon,
            seed=seed, zero_noise=args.zero_noise,
        )
        report = analysis.empirical_mse(cfg, trials=args.trials, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    out.write(f"# seed={seed}\n")
    out.write("variant,k,h,T,epsilon,trials,empirical_mse,se,closed_form\n")
    out.write(
        f"{args.variant},{args.k},{args.h},{T},{fmt(args.epsilon)},{args.trials},"
        f"{fmt(report.empirical_mse)},{fmt(report.standard_error)},"
        f"{fmt(report.closed_form_mse)}\n"
    )
    out.flush()
    if args.zero_noise:
        return EXIT_OK if report.empirical_mse == 0.0 else EXIT_ACCEPT
    tol = max(3.0 * report.standard_error, 0.05 * report.closed_form_mse)
    ok = abs(report.empirical_mse - report.closed_form_mse) <= tol
    return EXIT_OK if ok else EXIT_ACCEPT


def cmd_calibrate(args, out) -> int:
    rows = []
    branch = None
    try:
        if args.delta1 is not None:
            rows.append(noise.calibrate_pure_laplace(args.delta1, args.epsilon))
        if args.delta2 is not None:
            if args.delta is None:
                raise UsageError("--delta is required with --delta2")
            rows.append(noise.calibrate_gaussian(args.delta2, args.epsilon, args.delta))
            rows.append(noise.calibrate_l2_laplace(args.delta2, args.epsilon, args.delta))
        if args.delta1 is not None and args.delta2 is not None:
            lam = args.delta1 / args.epsilon
            branch = noise.epsilon_of_laplace(args.delta1, args.delta2, lam, args.delta)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc))
    if not rows:
        raise UsageError("provide --delta1 and/or --delta2")
    if branch is not None:
        out.write(f"# theorem3_branch={branch.branch} epsilon={fmt(branch.epsilon)}\n")
    out.write("regime,scale_or_sigma,epsilon,delta,variance\n")
    for r in rows:
        out.write(
            f"{r.regime.value},{fmt(r.scale_or_sigma)},{fmt(r.epsilon)},"
            f"{fmt(r.delta)},{fmt(r.variance)}\n"
        )
    out.flush()
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    variant = _VARIANTS[args.variant]
    try:
        if args.mode == "constants":
            k_star, c_star = analysis.optimal_k(variant, args.k_min, args.k_max)
            out.write("k,leading_constant\n")
            for k in range(args.k_min, args.k_max + 1):
                try:
                    out.write(f"{k},{fmt(analysis.leading_constant(variant, k))}\n")
                except ValueError:
                    continue
            out.write(f"# argmin k={k_star} constant={fmt(c_star)}\n")
        else:
            rep = analysis.crossover(variant, args.k)
            hb = analysis.henzinger_bound(args.T, args.epsilon, args.delta)
            pure = analysis.pure_leading_term(variant, args.k, args.T, args.epsilon)
            out.write(
                "B_eps,B_eps_delta,exponent,T,delta_threshold,"
                "henzinger_bound,pure_leading_term\n"
            )
            out.write(
                f"{fmt(rep.B_eps)},{fmt(rep.B_eps_delta)},{fmt(rep.exponent)},"
                f"{args.T},{fmt(rep.delta_threshold(args.T))},{fmt(hb)},{fmt(pure)}\n"
            )
    except ValueError as exc:
        raise UsageError(str(exc))
    out.flush()
    return EXIT_OK


def cmd_lowerbound(args, out) -> int:
    seed = _resolve_seed(args.seed)
    try:
        cfg = lowerbound.LowerBoundConfig(
            T=args.T, k=args.k, epsilon=args.epsilon,
            trials=args.trials, seed=seed, zero_noise=args.zero_noise,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    report = lowerbound.packing_experiment(cfg)
    out.write(f"# seed={seed}\n")
    out.write(
        f"# B={cfg.B} m={cfg.m} alpha={fmt(cfg.alpha)} "
        f"packing_value={fmt(report.packing_value)} "
        f"k_threshold={fmt(report.k_threshold)}\n"
    )
    out.write("i,pr_Ei,se,sum_Ej_null,tv_exact,tv_bound\n")
    for i in range(cfg.m):
        out.write(
            f"{i + 1},{fmt(float(report.pr_event[i]))},{fmt(float(report.pr_event_se[i]))},"
            f"{fmt(report.sum_null)},{fmt(report.tv_exact)},{fmt(report.tv_bound)}\n"
        )
    out.flush()
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "bench": cmd_bench,
    "calibrate": cmd_calibrate,
    "analyze": cmd_analyze,
    "lowerbound": cmd_lowerbound,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        out, close = _open_output(getattr(args, "output", "-"))
        try:
            return _COMMANDS[args.command](args, out)
        finally:
            if close:
                out.close()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
