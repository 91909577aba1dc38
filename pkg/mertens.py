#!/usr/bin/env python3
"""
Mertens Function Toolkit

Command-line entry point over ``mertens_lib``:

- sieve:       full-range M(n) scan with extrema/zero/sample events and checkpoints
- mertens:     isolated M(x) in O(x^(2/3+eps))
- bounds:      lattice search for large |h(y, N)| and a bound certificate
- qtilde:      explicit-formula estimate of M(x)/sqrt(x) from zeta zeros
- zero-stats:  V(x), M+(x), gap histograms and band multipliers
- verify:      known-value verification suite
- verify-cert: re-evaluate a stored bound certificate

Exit codes: 0 success, 1 failed verification, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import signal
import threading
import time
from math import log, sqrt
from typing import Callable, Dict

from mertens_lib.analytic import as_fraction, q_tilde, titchmarsh_M
from mertens_lib.certificate import bound_search, load_certificate, save_certificate, verify_certificate
from mertens_lib.combinatorial import IsolatedQuery, mertens_at, mertens_isolated
from mertens_lib.config import (
    DEFAULT_CHECKPOINT_EVERY,
    DEFAULT_STRIDE,
    BoundsConfig,
    MertensConfig,
    QTildeConfig,
    RunConfig,
    SieveConfig,
    VerifyConfig,
    ZeroStatsConfig,
    default_threads,
)
from mertens_lib.dirichlet import Interpretation, benito_varona_M
from mertens_lib.errors import IntegrityError, ParameterError, PrecisionError
from mertens_lib.logger import get_logger, setup_logging
from mertens_lib.metrics import get_run_metrics
from mertens_lib.output import jsonable, write_csv, write_events, write_result
from mertens_lib.scan import bucket_scan, mertens_scan
from mertens_lib.sieve import DEFAULT_BLOCK_LEN
from mertens_lib.utils import atomic_write_text
from mertens_lib.verify import cmd_verify, nested_reference
from mertens_lib.zero_stats import (
    ZeroList,
    band_multiplier,
    band_ratio,
    count_zeros,
    gap_histogram,
    gap_rows,
    positivity,
    positivity_rows,
    prime_square_set,
    vcount_rows,
)
from mertens_lib.zeros import derive_terms, load_zeros

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3

_POWER_RE = re.compile(r"^\s*(\d+)\s*(?:\^|\*\*)\s*(\d+)\s*$")
_SCI_RE = re.compile(r"^\s*(\d+)[eE](\d+)\s*$")

# Global stop event - a running sieve checks it at every block boundary
_shutdown_event = threading.Event()


def _handle_sigint(signum, frame):
    """Ask a running scan to stop after writing its checkpoint."""
    logging.getLogger("mertens").info("SIGINT received; stopping at the next block boundary")
    _shutdown_event.set()


def parse_int(text: str) -> int:
    """Integer argument; also accepts ``2^40``, ``2**40`` and ``1e9``."""
    match = _POWER_RE.match(text)
    if match:
        return int(match.group(1)) ** int(match.group(2))
    match = _SCI_RE.match(text)
    if match:
        return int(match.group(1)) * 10 ** int(match.group(2))
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse the global flags and one subcommand."""
    parser = argparse.ArgumentParser(
        prog="mertens.py",
        description="Mertens function sieve, isolated values, zero statistics and analytic bounds",
        epilog=(
            "Examples:\n"
            "  python mertens.py sieve --limit 10**6 --stride 10**4 --out events.jsonl\n"
            "  python mertens.py mertens --x 2^30\n"
            "  python mertens.py zero-stats --zeros events.jsonl vcount --x 10^6\n"
            "  python mertens.py bounds --zeros zeros.txt --N 25 --nu 64 --out cert.json\n"
            "  python mertens.py verify --level quick\n"
        ),
        formatter_class=argparse.RawTextHelpFormatter,
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $MERTENS_THREADS or min(4, cpus))")
    parser.add_argument("--log-file", default=None, help="plain-text log file")
    parser.add_argument("--json-log", default=None, help="JSON-lines log file")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("sieve", help="scan M(n) for n <= limit")
    p.add_argument("--limit", type=parse_int, required=True)
    p.add_argument("--block-len", type=parse_int, default=DEFAULT_BLOCK_LEN)
    p.add_argument("--stride", type=parse_int, default=DEFAULT_STRIDE)
    p.add_argument("--bucketed", action="store_true", help="bucket primes above the block length")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--checkpoint-every", type=int, default=DEFAULT_CHECKPOINT_EVERY)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--max-blocks", type=int, default=None, help="stop after this many blocks")
    p.add_argument("--out", default="-")

    p = sub.add_parser("mertens", help="isolated M(x)")
    p.add_argument("--x", type=parse_int, required=True)
    p.add_argument("--u", type=parse_int, default=None)
    p.add_argument("--engine", choices=("numpy", "walk"), default="numpy")
    p.add_argument("--verify-nested", action="store_true", help="also check M(x // 128)")
    p.add_argument("--alt-identity", choices=[i.value for i in Interpretation], default=None,
                   help="also evaluate the Dirichlet-inverse identity (x <= 10^5)")
    p.add_argument("--json", action="store_true", help="compact single-line JSON")
    p.add_argument("--out", default="-")

    p = sub.add_parser("bounds", help="lattice bound search")
    p.add_argument("--zeros", required=True)
    p.add_argument("--N", type=int, default=25)
    p.add_argument("--nu", type=int, default=64)
    p.add_argument("--sign", choices=("plus", "minus"), default="plus")
    p.add_argument("--delta", type=float, default=0.99)
    p.add_argument("--eta", type=float, default=0.501)
    p.add_argument("--eval-N", type=int, default=200)
    p.add_argument("--ordering", choices=("by_gamma", "by_a_desc"), default="by_gamma")
    p.add_argument("--baseline-samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("qtilde", help="explicit-formula estimate of q(x)")
    p.add_argument("--zeros", required=True)
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--x", action="append", required=True, help="repeatable")
    p.add_argument("--compare", action="store_true", help="also compute the exact M(x)")
    p.add_argument("--trivial-terms", type=int, default=0,
                   help="also report the truncated explicit M(x) with this many trivial-zero terms")
    p.add_argument("--out", default="-")

    p = sub.add_parser("zero-stats", help="statistics over the zeros of M")
    p.add_argument("--zeros", default=None, help="event stream written by 'sieve'")
    p.add_argument("--csv", action="store_true", help="write the table form")
    p.add_argument("--out", default="-")
    actions = p.add_subparsers(dest="action", required=True, metavar="ACTION")
    a = actions.add_parser("vcount", help="V(x), zeros below x")
    a.add_argument("--x", type=parse_int, required=True)
    a = actions.add_parser("positivity", help="M+(x)")
    a.add_argument("--x", type=parse_int, required=True)
    a = actions.add_parser("gaps", help="G_m(g)")
    a.add_argument("--m", type=parse_int, required=True)
    a = actions.add_parser("band", help="band multiplier of gap length g")
    a.add_argument("--g", type=parse_int, required=True)
    a.add_argument("--m", type=parse_int, default=None, help="also measure the band ratio over m zeros")

    p = sub.add_parser("verify", help="known-value verification suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--zeros", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default="-")

    p = sub.add_parser("verify-cert", help="re-evaluate a bound certificate")
    p.add_argument("certificate")
    p.add_argument("--zeros", default=None, help="default: the file named in the certificate")
    p.add_argument("--out", default="-")

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    command = args.command
    if command == "sieve":
        params = SieveConfig(limit=args.limit, block_len=args.block_len, stride=args.stride,
                             bucketed=args.bucketed, checkpoint=args.checkpoint,
                             checkpoint_every=args.checkpoint_every, resume=args.resume,
                             max_blocks=args.max_blocks)
    elif command == "mertens":
        params = MertensConfig(x=args.x, u=args.u, verify_nested=args.verify_nested, engine=args.engine)
    elif command == "bounds":
        params = BoundsConfig(zeros=args.zeros, N=args.N, nu=args.nu, sign=args.sign, delta=args.delta,
                              eta=args.eta, eval_N=args.eval_N, ordering=args.ordering,
                              baseline_samples=args.baseline_samples, seed=args.seed)
    elif command == "qtilde":
        params = QTildeConfig(zeros=args.zeros, N=args.N, x=list(args.x), compare=args.compare)
    elif command == "zero-stats":
        params = ZeroStatsConfig(zeros=args.zeros, action=args.action, x=getattr(args, "x", None),
                                 m=getattr(args, "m", None), g=getattr(args, "g", None), csv=args.csv)
    elif command == "verify":
        params = VerifyConfig(level=args.level, zeros=args.zeros, checkpoint=args.checkpoint)
    else:
        params = None
    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else "INFO"
    threads = args.threads if args.threads is not None else default_threads()
    config = RunConfig(command=command, params=params, threads=threads, log_file=args.log_file,
                       json_log=args.json_log, log_level=level, out=args.out)
    config.validate()
    return config


def run_sieve(config: RunConfig, args: argparse.Namespace) -> int:
    params: SieveConfig = config.params
    scan = bucket_scan if params.bucketed else mertens_scan
    stats = scan(params.limit, block_len=params.block_len, stride=params.stride, threads=config.threads,
                 checkpoint=params.checkpoint, resume=params.resume,
                 checkpoint_every=params.checkpoint_every, max_blocks=params.max_blocks,
                 stop_event=_shutdown_event)
    events = list(stats.events())
    if stats.complete:
        events.append(stats.summary())
    else:
        get_logger().warning(f"Scan incomplete at n={stats.running.n_last}; no summary written")
    write_events(config.out, events)
    get_logger().info(f"Sieve to {stats.running.n_last}: M = {stats.running.M_last}, "
                      f"{len(stats.zeros)} zeros, max {stats.running.max}, min {stats.running.min}")
    return EXIT_OK


def run_mertens(config: RunConfig, args: argparse.Namespace) -> int:
    params: MertensConfig = config.params
    result = mertens_isolated(IsolatedQuery(params.x, params.u), engine=params.engine,
                              threads=config.threads, nested=params.verify_nested)
    payload = result.to_dict()
    payload["q"] = result.M / sqrt(result.x)
    status = EXIT_OK
    if params.verify_nested:
        reference = nested_reference(result)
        payload["nested"]["ok"] = reference == result.nested_M
        if reference != result.nested_M:
            get_logger().error(f"Nested check failed: M({result.nested_x}) = {reference}, "
                               f"isolated run gave {result.nested_M}")
            status = EXIT_FAILED
    if args.alt_identity is not None:
        outcome = benito_varona_M(params.x, interpretation=Interpretation(args.alt_identity))
        matches = isinstance(outcome, int)
        payload["alt_identity"] = {"interpretation": args.alt_identity, "agrees": matches,
                                   "value": outcome if matches else outcome.to_dict()}
    text = json.dumps(jsonable(payload), separators=(",", ":")) if args.json else \
        json.dumps(jsonable(payload), indent=2)
    atomic_write_text(config.out, text + "\n")
    return status


def run_bounds(config: RunConfig, args: argparse.Namespace) -> int:
    params: BoundsConfig = config.params
    records = load_zeros(params.zeros)
    cert = bound_search(records, N=params.N, nu=params.nu, sign=params.sign, delta=params.delta,
                        eta=params.eta, N_eval=params.eval_N, ordering=params.ordering,
                        baseline_samples=params.baseline_samples, seed=params.seed,
                        zeros_file=str(params.zeros))
    save_certificate(config.out, cert)
    return EXIT_OK


def run_qtilde(config: RunConfig, args: argparse.Namespace) -> int:
    params: QTildeConfig = config.params
    records = load_zeros(params.zeros)
    if params.N > len(records):
        raise ParameterError(f"--N {params.N} but {params.zeros} holds {len(records)} zeros")
    terms = derive_terms(records[:params.N])
    points = []
    for raw in params.x:
        x = as_fraction(parse_int(raw)) if _POWER_RE.match(raw) else as_fraction(raw)
        if x <= 1:
            raise ParameterError(f"--x must exceed 1, got {raw}")
        log_x = log(x.numerator) - log(x.denominator)
        point = {"x": raw, "log_x": log_x, "q_tilde": float(q_tilde(log_x, params.N, terms))}
        if args.trivial_terms > 0:
            point["M_explicit"] = float(titchmarsh_M(x, params.N, args.trivial_terms, terms))
        if params.compare and x.denominator == 1:
            M = mertens_at(x.numerator, threads=config.threads)
            point["M"] = M
            point["q"] = M / sqrt(x.numerator)
            point["error"] = point["q_tilde"] - point["q"]
        points.append(point)
    write_result(config.out, {"N": params.N, "points": points})
    return EXIT_OK


def run_zero_stats(config: RunConfig, args: argparse.Namespace) -> int:
    params: ZeroStatsConfig = config.params
    if params.action == "band" and params.m is None:
        primes = prime_square_set(params.g)
        multiplier = band_multiplier(params.g)
        if params.csv:
            write_csv(config.out, ("g", "primes", "multiplier"),
                      [(params.g, " ".join(map(str, primes)), str(multiplier))])
        else:
            write_result(config.out, {"g": params.g, "primes": list(primes), "multiplier": multiplier})
        return EXIT_OK

    if params.zeros is None:
        raise ParameterError(f"zero-stats {params.action} needs --zeros")
    zeros = ZeroList.from_events(params.zeros)
    if params.action == "vcount":
        if params.csv:
            write_csv(config.out, ("k", "x", "V"), vcount_rows(zeros))
        else:
            write_result(config.out, {"x": params.x, "V": count_zeros(zeros, params.x)})
    elif params.action == "positivity":
        if params.csv:
            xs = sorted({10 ** k for k in range(1, len(str(params.x))) if 10 ** k <= params.x} | {params.x})
            write_csv(config.out, ("x", "positive", "fraction"), positivity_rows(zeros, xs))
        else:
            frac = positivity(zeros, params.x)
            write_result(config.out, {"x": params.x, "numerator": frac.numerator,
                                      "denominator": frac.denominator, "value": float(frac)})
    elif params.action == "gaps":
        hist = gap_histogram(zeros, params.m)
        if params.csv:
            write_csv(config.out, ("g", "count", "multiplier"), gap_rows(hist))
        else:
            write_result(config.out, {"m": hist.m, "total": hist.total,
                                      "counts": {str(g): c for g, c in sorted(hist.counts.items())}})
    else:
        report = band_ratio(zeros, params.m)
        payload = {"g": params.g, "primes": list(prime_square_set(params.g)),
                   "multiplier": band_multiplier(params.g), "band_ratio": report.to_dict()}
        if params.csv:
            write_csv(config.out, ("g", "multiplier", "m", "pairs", "mean_ratio"),
                      [(params.g, str(payload["multiplier"]), report.m, report.pairs, report.mean_ratio)])
        else:
            write_result(config.out, payload)
    return EXIT_OK


def run_verify(config: RunConfig, args: argparse.Namespace) -> int:
    params: VerifyConfig = config.params
    report = cmd_verify(params.level, zeros=params.zeros, checkpoint=params.checkpoint, threads=config.threads)
    write_result(config.out, report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAILED


def run_verify_cert(config: RunConfig, args: argparse.Namespace) -> int:
    cert = load_certificate(args.certificate)
    zeros_path = args.zeros or cert.zeros_file
    if not zeros_path:
        raise ParameterError("certificate names no zeros file; pass --zeros")
    check = verify_certificate(cert, load_zeros(zeros_path))
    write_result(config.out, {"certificate": args.certificate, "h_value": cert.h_value,
                              "direction": cert.direction, **check.to_dict()})
    return EXIT_OK if check.ok else EXIT_FAILED


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "sieve": run_sieve,
    "mertens": run_mertens,
    "bounds": run_bounds,
    "qtilde": run_qtilde,
    "zero-stats": run_zero_stats,
    "verify": run_verify,
    "verify-cert": run_verify_cert,
}


def cmd_dispatch(config: RunConfig, args: argparse.Namespace) -> int:
    """Run one validated command and map its failure to an exit status."""
    logger = get_logger()
    try:
        return COMMANDS[config.command](config, args)
    except ParameterError as e:
        logger.error(f"{config.command}: {e}")
        return EXIT_USAGE
    except (IntegrityError, PrecisionError, FileNotFoundError) as e:
        logger.error(f"{config.command}: {e}")
        return EXIT_DATA


def main(argv: list[str] | None = None) -> int:
    """
    Main entry point.

    Args:
        argv: Command line arguments (for testing)

    Returns:
        Exit code (0 success, 1 failed verification, 2 usage, 3 data error)
    """
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logger = setup_logging(args.log_file, args.json_log, level)

    try:
        config = build_config(args)
    except ParameterError as e:
        logger.error(str(e))
        return EXIT_USAGE

    previous_handler = None
    try:
        previous_handler = signal.signal(signal.SIGINT, _handle_sigint)
    except ValueError:
        # not the main thread
        pass

    logger.debug(f"Configuration for {config.command}", extra_data={"config": config.to_dict()})
    _shutdown_event.clear()
    started = time.perf_counter()
    with logger.thread_context("MainThread", "main", {"command": config.command}):
        try:
            status = cmd_dispatch(config, args)
        finally:
            elapsed = time.perf_counter() - started
            logger.info(f"{config.command} finished in {elapsed:.3f}s",
                        extra_data={"command": config.command, "seconds": round(elapsed, 6),
                                    "metrics": get_run_metrics().get_summary_stats()})
            if previous_handler is not None:
                signal.signal(signal.SIGINT, previous_handler)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
