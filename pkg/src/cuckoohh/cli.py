"""Command-line front end: stream generation and benchmark runs emitting CSV."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .bench import ALGOS, RunSpec, rows_for, threads_from_env
from .metrics import rows_to_csv
from .streamgen import ZipfSpec, gen_zipf, write_stream

# (phi, memory_bytes) per subcommand; the parallel defaults are per thread.
SEQUENTIAL_DEFAULTS = (0.0005, 4096)
PARALLEL_DEFAULTS = (0.00005, 1024)
STREAM_DEFAULTS = {"skew": 1.2, "count": 1_000_000, "universe": 100_000}


def _add_stream_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--skew", type=float, default=None, help="Zipf exponent (default 1.2)")
    p.add_argument("--count", type=int, default=None, help="stream length (default 1e6)")
    p.add_argument("--universe", type=int, default=None, help="distinct items (default 1e5)")
    p.add_argument("--seed", type=int, default=0)


def _add_run_flags(p: argparse.ArgumentParser, parallel: bool) -> None:
    phi, memory = PARALLEL_DEFAULTS if parallel else SEQUENTIAL_DEFAULTS
    algos = [a for a in ALGOS if a != "oracle"] if parallel else list(ALGOS)
    p.add_argument("--algo", choices=algos, default="chk")
    p.add_argument("--phi", type=float, default=phi)
    p.add_argument("--memory-bytes", type=int, default=memory,
                   help="memory budget" + (" per thread" if parallel else ""))
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("-i", "--input", default=None, help="StreamFile to read instead of a synthetic stream")
    p.add_argument("-o", "--output", default=None, help="CSV destination (default stdout)")
    _add_stream_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuckoohh", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic Zipf StreamFile")
    _add_stream_flags(gen)
    gen.add_argument("-o", "--output", default="-", help="destination path (default stdout)")

    acc = sub.add_parser("accuracy", help="precision/recall/ARE against the exact oracle")
    _add_run_flags(acc, parallel=False)

    seq = sub.add_parser("bench-seq", help="single-thread throughput and accuracy")
    _add_run_flags(seq, parallel=False)
    seq.add_argument("--warmup", type=float, default=0.01, help="leading fraction excluded from timing")

    par = sub.add_parser("bench-par", help="parallel wrapper throughput and hh-query latency")
    _add_run_flags(par, parallel=True)
    par.add_argument("--variant", choices=["I", "Q"], default="I")
    par.add_argument("--threads", type=int, default=1, help="worker count (HH_THREADS overrides)")
    par.add_argument("--query-rate", type=float, default=0.0,
                     help="fraction of each thread's operations that are hh-queries")
    par.add_argument("--max-buf", type=int, default=16)
    par.add_argument("--max-w", type=int, default=1000)
    par.add_argument("--warmup", type=float, default=0.01)
    return parser


def _stream_values(args: argparse.Namespace) -> dict:
    explicit = {k for k in STREAM_DEFAULTS if getattr(args, k) is not None}
    if getattr(args, "input", None) is not None and explicit:
        flags = ", ".join(f"--{k}" for k in sorted(explicit))
        raise ValueError(f"{flags}: valid only with synthetic input, not with -i")
    return {k: (getattr(args, k) if k in explicit else v) for k, v in STREAM_DEFAULTS.items()}


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    stream = _stream_values(args)
    fields = dict(
        command=args.command, algo=args.algo, phi=args.phi, memory_bytes=args.memory_bytes,
        skew=stream["skew"], count_n=stream["count"], universe=stream["universe"],
        repeats=args.repeats, seed=args.seed, input=args.input, output=args.output,
    )
    if args.command in ("bench-seq", "bench-par"):
        fields["warmup"] = args.warmup
    if args.command == "bench-par":
        fields.update(variant=args.variant, threads=threads_from_env(args.threads),
                      query_rate=args.query_rate, max_buf=args.max_buf, max_w=args.max_w)
        if fields["threads"] < 1:
            raise ValueError("threads must be >= 1")
    return RunSpec(**fields)


def _generate(args: argparse.Namespace) -> None:
    stream = _stream_values(args)
    items = gen_zipf(ZipfSpec(stream["universe"], stream["skew"], stream["count"], args.seed))
    if args.output == "-":
        sys.stdout.write("".join(f"{x}\n" for x in items.tolist()))
    else:
        write_stream(args.output, items)


def _emit(spec: RunSpec) -> None:
    out = open(spec.output, "w", newline="") if spec.output else sys.stdout
    try:
        out.write(rows_to_csv((), header=True))
        for row in rows_for(spec):
            out.write(rows_to_csv([row], header=False))
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            _generate(args)
        else:
            _emit(spec_from_args(args))
    except (ValueError, TypeError, OSError) as exc:
        print(f"cuckoohh {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
