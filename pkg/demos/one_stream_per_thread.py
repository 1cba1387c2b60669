"""Each thread gets its own stream and its own stream communicator.

Rank 0 runs four threads, each sending 100 bytes to its partner thread on
rank 1 over a private communicator.  Because every stream holds an
exclusive endpoint, no two threads ever touch the same matching engine and
no locks are taken on the send/receive path.

    python demos/one_stream_per_thread.py
"""

import threading

import streamix as sx

NTHREADS = 4
MSG = 100


def rank_main(proc):
    streams = [sx.stream_create(proc) for _ in range(NTHREADS)]
    comms = [sx.stream_comm_create(proc.comm_world, s) for s in streams]
    received = [None] * NTHREADS

    def worker(tid):
        comm = comms[tid]
        if proc.rank == 0:
            buf = bytes([tid]) * MSG
            sx.send(buf, MSG, sx.BYTE, 1, 0, comm)
        else:
            buf = bytearray(MSG)
            sx.recv(buf, MSG, sx.BYTE, 0, 0, comm)
            received[tid] = buf

    threads = [threading.Thread(target=worker, args=(t,)) for t in range(NTHREADS)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    if proc.rank == 1:
        for tid, buf in enumerate(received):
            ep = streams[tid].endpoint
            print(f"thread {tid}: {len(buf)} bytes, all == {tid}: {set(buf) == {tid}}, "
                  f"endpoint {ep.pool_index} ({ep.exclusion} locking)")

    for c in comms:
        sx.comm_free(c)
    for s in streams:
        sx.stream_free(s)


if __name__ == "__main__":
    world = sx.World(2, sx.FabricConfig(implicit_pool_size=1, explicit_pool_size=NTHREADS))
    world.run(rank_main)
