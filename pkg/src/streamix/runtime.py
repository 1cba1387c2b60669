"""Logical processes living in one harness process.

A :class:`World` plays the role of ``mpiexec``: it builds ``size`` logical
processes, each with its own endpoint pool, and :meth:`World.run` launches
one thread per rank running the same function (SPMD style).
"""

import itertools
import threading

from .comm import MAX_CONTEXT_ID, Communicator, LEGACY, member_entry
from .fabric import Fabric, FabricConfig


class Process:
    """Rank-local runtime state: endpoint pool, streams, context ids."""

    def __init__(self, world, rank, config):
        self.world = world
        self.rank = rank
        self.fabric = Fabric(config)
        self.lock = threading.RLock()
        self.streams = {}
        self.stream_ids = itertools.count(1)
        # bit i set: context id i is free here; id 0 is the world
        self.free_contexts = ((1 << (MAX_CONTEXT_ID + 1)) - 1) & ~1
        self.comm_world = None

    @property
    def config(self):
        return self.fabric.config

    def __repr__(self):
        return f"<Process {self.rank}>"


class World:
    def __init__(self, size=2, config=None):
        if size < 1:
            raise ValueError("world size must be >= 1")
        if config is None or isinstance(config, FabricConfig):
            configs = [config or FabricConfig() for _ in range(size)]
        else:
            configs = list(config)
            if len(configs) != size:
                raise ValueError("need one FabricConfig per rank")
        self.size = size
        self.processes = [Process(self, r, c) for r, c in enumerate(configs)]
        members = [member_entry(p, [None]) for p in self.processes]
        for p in self.processes:
            p.comm_world = Communicator(
                p, 0, list(range(size)), members, [None], LEGACY
            )

    def __getitem__(self, rank):
        return self.processes[rank]

    def inbound(self, rank, endpoint_id):
        return self.processes[rank].fabric.endpoints[endpoint_id].inbound

    def run(self, fn, *args, timeout=60.0):
        """Run ``fn(proc, *args)`` on every rank concurrently; return results by rank."""
        results = [None] * self.size
        errors = [None] * self.size
        done = threading.Condition()
        finished = [False] * self.size

        def main(rank):
            try:
                results[rank] = fn(self.processes[rank], *args)
            except BaseException as exc:  # noqa: BLE001 - re-raised below
                errors[rank] = exc
            with done:
                finished[rank] = True
                done.notify_all()

        threads = [
            threading.Thread(target=main, args=(r,), name=f"rank-{r}", daemon=True)
            for r in range(self.size)
        ]
        for t in threads:
            t.start()
        with done:
            done.wait_for(lambda: all(finished) or any(errors), timeout)
            # a failed rank usually leaves its peers stuck in a collective
            if any(errors):
                done.wait_for(lambda: all(finished), 1.0)
            hung = [t.name for t, f in zip(threads, finished) if not f]
        for exc in errors:
            if exc is not None:
                raise exc
        if hung:
            raise TimeoutError(f"ranks still running after {timeout}s: {hung}")
        return results
