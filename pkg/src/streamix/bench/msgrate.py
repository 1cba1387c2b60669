"""Multithreaded message-rate benchmark.

Two logical processes; thread ``i`` of rank 0 streams small messages to
thread ``i`` of rank 1 over a communicator private to that pair.  Each
batch is ``window`` isends (irecvs on the receiver) plus a waitall, then a
one-byte acknowledgement so the sender cannot run arbitrarily far ahead.

Three regimes are compared:

``global_lock``
    legacy communicators, one implicit endpoint, one process-wide lock.
``per_vci_implicit``
    legacy communicators hashed one-to-one onto ``threads`` implicit
    endpoints, one lock per endpoint.
``stream_explicit``
    stream communicators over exclusive streams; no locks on the fast path.
"""

import csv
import os
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .. import fabric
from ..comm import comm_dup, comm_free, stream_comm_create
from ..errors import ErrorCode, StreamixError
from ..fabric import FabricConfig
from ..p2p import BYTE, irecv, isend, recv, send, waitall
from ..runtime import World
from ..stream import stream_create, stream_free

GLOBAL_LOCK = "global_lock"
PER_VCI_IMPLICIT = "per_vci_implicit"
STREAM_EXPLICIT = "stream_explicit"
MODES = (GLOBAL_LOCK, PER_VCI_IMPLICIT, STREAM_EXPLICIT)

#: short names accepted on the command line
MODE_ALIASES = {"global": GLOBAL_LOCK, "pervci": PER_VCI_IMPLICIT, "stream": STREAM_EXPLICIT}

CSV_COLUMNS = ["mode", "threads", "msg_bytes", "iters", "elapsed_s", "msgs_per_s"]

DATA_TAG = 1
ACK_TAG = 2


@dataclass
class BenchConfig:
    threads: int = 1
    mode: str = STREAM_EXPLICIT
    msg_bytes: int = 8
    iters: int = 4096
    window: int = 64
    warmup: int = 256
    seed: int = 0
    csv: Optional[str] = None

    def __post_init__(self):
        self.mode = MODE_ALIASES.get(self.mode, self.mode)
        if self.mode not in MODES:
            raise StreamixError(ErrorCode.CONFIG_INVALID, f"unknown mode {self.mode!r}")
        if self.threads < 1 or self.window < 1 or self.iters < 0 or self.warmup < 0:
            raise StreamixError(ErrorCode.CONFIG_INVALID, "threads/window must be >= 1")
        if self.msg_bytes < 0:
            raise StreamixError(ErrorCode.CONFIG_INVALID, "msg_bytes must be >= 0")

    def fabric_config(self) -> FabricConfig:
        t = self.threads
        cap = fabric.MAX_POOL_SIZE
        if self.mode == GLOBAL_LOCK:
            return FabricConfig(1, 0, fabric.GLOBAL, fabric.ONE_TO_ONE)
        if self.mode == PER_VCI_IMPLICIT:
            if t > cap:
                raise StreamixError(ErrorCode.CONFIG_INVALID, f"{t} threads > {cap} endpoints")
            return FabricConfig(t, 0, fabric.PER_ENDPOINT, fabric.ONE_TO_ONE)
        if t > cap - 1:
            raise StreamixError(ErrorCode.CONFIG_INVALID, f"{t} threads > {cap - 1} endpoints")
        # the implicit pool only carries setup traffic here, so the environment may size it
        return FabricConfig(None, t, fabric.PER_ENDPOINT, fabric.ONE_TO_ONE)


@dataclass
class BenchResult:
    mode: str
    threads: int
    msg_bytes: int
    iters: int
    elapsed_s: float
    msgs_per_s: float
    per_thread: List[int] = field(default_factory=list)

    @property
    def total_messages(self):
        return sum(self.per_thread)

    def row(self):
        return {
            "mode": self.mode,
            "threads": self.threads,
            "msg_bytes": self.msg_bytes,
            "iters": self.iters,
            "elapsed_s": f"{self.elapsed_s:.6f}",
            "msgs_per_s": f"{self.msgs_per_s:.1f}",
        }


def _batches(n, window):
    full, rest = divmod(n, window)
    return [window] * full + ([rest] if rest else [])


def _sender(comm, payload, nbytes, batches):
    ack = bytearray(1)
    sent = 0
    for w in batches:
        waitall([isend(payload, nbytes, BYTE, 1, DATA_TAG, comm) for _ in range(w)])
        recv(ack, 1, BYTE, 1, ACK_TAG, comm)
        sent += w
    return sent


def _receiver(comm, bufs, nbytes, batches):
    ack = bytearray(1)
    got = 0
    for w in batches:
        statuses = waitall([irecv(bufs[k], nbytes, BYTE, 0, DATA_TAG, comm) for k in range(w)])
        got += len(statuses)
        send(ack, 1, BYTE, 0, ACK_TAG, comm)
    return got


def run_msgrate(config: BenchConfig) -> BenchResult:
    world = World(2, config.fabric_config())
    nthreads = config.threads

    def setup(proc):
        if config.mode == STREAM_EXPLICIT:
            streams = [stream_create(proc) for _ in range(nthreads)]
            comms = [stream_comm_create(proc.comm_world, s) for s in streams]
        else:
            streams = []
            comms = [comm_dup(proc.comm_world) for _ in range(nthreads)]
        return streams, comms

    setups = world.run(setup)
    rng = np.random.default_rng(config.seed)
    nbytes = config.msg_bytes
    warm = _batches(config.warmup, config.window)
    timed = _batches(config.iters, config.window)

    start = threading.Barrier(2 * nthreads + 1)
    counts = [[0] * nthreads for _ in range(2)]
    errors = []

    def driver(rank, i):
        comm = setups[rank][1][i]
        try:
            if rank == 0:
                payload = rng_payloads[i]
                _sender(comm, payload, nbytes, warm)
                start.wait()
                counts[0][i] = _sender(comm, payload, nbytes, timed)
            else:
                bufs = [bytearray(nbytes) for _ in range(config.window)]
                _receiver(comm, bufs, nbytes, warm)
                start.wait()
                counts[1][i] = _receiver(comm, bufs, nbytes, timed)
        except BaseException as exc:  # noqa: BLE001 - surfaced after join
            errors.append(exc)
            start.abort()

    rng_payloads = [rng.integers(0, 256, nbytes, dtype=np.uint8).tobytes() for _ in range(nthreads)]
    threads = [
        threading.Thread(target=driver, args=(rank, i), daemon=True)
        for rank in range(2)
        for i in range(nthreads)
    ]
    for t in threads:
        t.start()
    try:
        start.wait()
    except threading.BrokenBarrierError:
        pass
    t0 = time.perf_counter()
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - t0
    if errors:
        raise errors[0]

    def teardown(proc):
        streams, comms = setups[proc.rank]
        for c in comms:
            comm_free(c)
        for s in streams:
            stream_free(s)

    world.run(teardown)
    received = counts[1]
    elapsed = max(elapsed, 1e-9)
    result = BenchResult(
        mode=config.mode,
        threads=nthreads,
        msg_bytes=nbytes,
        iters=config.iters,
        elapsed_s=elapsed,
        msgs_per_s=sum(received) / elapsed,
        per_thread=received,
    )
    if config.csv:
        write_csv(config.csv, [result])
    return result


def write_csv(path, results):
    """Append result rows to ``path``, writing the header for a new file."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if new:
            writer.writeheader()
        for r in results:
            writer.writerow(r.row())


def median_rate(config: BenchConfig, repeats=5) -> float:
    return statistics.median(run_msgrate(config).msgs_per_s for _ in range(repeats))
