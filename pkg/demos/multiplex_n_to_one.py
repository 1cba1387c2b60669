"""One multiplex communicator instead of many stream communicators.

Rank 0 attaches four streams and rank 1 attaches one.  Four sender threads
on rank 0 each address rank 1's stream 0 by index; the receiver uses a
wildcard source index and learns who sent each message from the status.
Messages from one sending stream still arrive in order.

    python demos/multiplex_n_to_one.py
"""

import collections
import threading

import streamix as sx

SENDERS = 4
PER_SENDER = 5


def rank_main(proc):
    n = SENDERS if proc.rank == 0 else 1
    streams = [sx.stream_create(proc) for _ in range(n)]
    comm = sx.stream_comm_create_multiple(proc.comm_world, streams)

    if proc.rank == 0:
        def sender(idx):
            for k in range(PER_SENDER):
                sx.stream_send(bytes([idx, k]), 2, sx.BYTE, 1, 0, comm, idx, 0)

        threads = [threading.Thread(target=sender, args=(i,)) for i in range(SENDERS)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        seen = collections.defaultdict(list)
        for _ in range(SENDERS * PER_SENDER):
            buf = bytearray(2)
            status = sx.stream_recv(buf, 2, sx.BYTE, 0, 0, comm, sx.ANY_INDEX, 0)
            seen[status.source_index].append(buf[1])
        print("streams attached per rank:", comm.counts)
        for idx in sorted(seen):
            print(f"from stream {idx}: sequence {seen[idx]}")

    sx.barrier(comm)
    sx.comm_free(comm)
    for s in streams:
        sx.stream_free(s)


if __name__ == "__main__":
    world = sx.World(2, sx.FabricConfig(1, SENDERS))
    world.run(rank_main)
