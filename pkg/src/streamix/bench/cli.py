"""``streamix-bench`` command line."""

import argparse
import csv
import sys

from .msgrate import CSV_COLUMNS, MODE_ALIASES, BenchConfig, run_msgrate, write_csv
from .oracle import MAX_OPS, run_interleaving_oracle


def _parser():
    parser = argparse.ArgumentParser(prog="streamix-bench")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("msgrate", help="multithreaded message-rate benchmark")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--msg-bytes", type=int, default=8)
    m.add_argument("--iters", type=int, default=4096, help="messages per thread")
    m.add_argument("--window", type=int, default=64)
    m.add_argument("--warmup", type=int, default=256)
    m.add_argument("--mode", choices=sorted(MODE_ALIASES), default="stream")
    m.add_argument("--repeat", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--csv", metavar="PATH", help="append rows here (default: stdout)")

    o = sub.add_parser("oracle", help="exhaustive matching-order check")
    o.add_argument("--max-ops", type=int, default=4)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "oracle":
        if not 0 <= args.max_ops <= MAX_OPS:
            print(f"--max-ops must be in [0, {MAX_OPS}]", file=sys.stderr)
            return 2
        report = run_interleaving_oracle(args.max_ops)
        print(report.summary())
        for line in report.divergences[:20]:
            print("  " + line)
        return 0 if report.ok else 1

    config = BenchConfig(
        threads=args.threads,
        mode=args.mode,
        msg_bytes=args.msg_bytes,
        iters=args.iters,
        window=args.window,
        warmup=args.warmup,
        seed=args.seed,
    )
    results = [run_msgrate(config) for _ in range(args.repeat)]
    if args.csv:
        write_csv(args.csv, results)
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for r in results:
            writer.writerow(r.row())
    return 0


if __name__ == "__main__":
    sys.exit(main())
