"""Compare the three locking regimes of the message-rate benchmark.

Runs ``run_msgrate`` for each mode at a few thread counts and prints the
median aggregate rate.  Results depend heavily on core count: the locking
differences only show once driver threads actually run in parallel.

    python demos/message_rate.py [max_threads]
"""

import os
import statistics
import sys

from streamix.bench.msgrate import MODES, BenchConfig, run_msgrate


def main(max_threads=4, repeats=3):
    print(f"{os.cpu_count()} cores")
    print(f"{'threads':>7}" + "".join(f"{m:>20}" for m in MODES))
    t = 1
    while t <= max_threads:
        rates = []
        for mode in MODES:
            cfg = BenchConfig(threads=t, mode=mode, iters=4096)
            rates.append(statistics.median(run_msgrate(cfg).msgs_per_s for _ in range(repeats)))
        print(f"{t:>7}" + "".join(f"{r:>20,.0f}" for r in rates))
        t *= 2


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 4)
