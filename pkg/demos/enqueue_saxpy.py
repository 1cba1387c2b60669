"""Communication ordered on an execution queue, SAXPY style.

Rank 0 enqueues a send of ``x``.  Rank 1 enqueues a receive into ``x``
followed by a task computing ``y = a*x + y``.  The enqueue calls return at
once; the queue worker runs the items in order, so the task sees the
received data without any explicit wait.  One ``queue_synchronize`` at the
end covers both the data and the communication.

    python demos/enqueue_saxpy.py
"""

import numpy as np

import streamix as sx

N = 1024
A = np.float32(2.0)


def queue_comm(proc, queue):
    info = sx.Info()
    info.set("type", "exec_queue")
    sx.info_set_hex(info, "value", queue.handle)
    stream = sx.stream_create(proc, info)
    return sx.stream_comm_create(proc.comm_world, stream)


def main():
    world = sx.World(2, sx.FabricConfig(1, 1))
    queues = [sx.exec_queue_create(f"rank{r}") for r in range(2)]
    comms = world.run(lambda p: queue_comm(p, queues[p.rank]))

    x = [np.full(N, 1.0, dtype=np.float32), np.zeros(N, dtype=np.float32)]
    y = np.full(N, 2.0, dtype=np.float32)

    def saxpy():
        y[:] = A * x[1] + y

    # rank 0
    sx.send_enqueue(x[0], N, sx.FLOAT, 1, 0, comms[0])
    # rank 1
    sx.recv_enqueue(x[1], N, sx.FLOAT, 0, 0, comms[1])
    sx.enqueue_task(queues[1], saxpy, label="saxpy")
    print("enqueued; rank 1 queue has", queues[1].pending, "items pending")

    for q in queues:
        sx.queue_synchronize(q)
    print("y[:4] =", y[:4], "| all 4.0:", bool(np.all(y == 4.0)))
    print("rank 1 start order:", queues[1].start_log)
    for q in queues:
        sx.exec_queue_destroy(q)


if __name__ == "__main__":
    main()
