"""Enqueue-style communication on execution-queue streams.

Every ``*_enqueue`` call only appends an item to the queue of the
communicator's local stream and returns.  The queue worker later runs the
item once everything before it has finished:

* ``send_enqueue`` / ``recv_enqueue`` hold the queue until the message is
  complete;
* ``isend_enqueue`` / ``irecv_enqueue`` finish as soon as the operation is
  registered with the fabric, and a later ``wait_enqueue`` /
  ``waitall_enqueue`` item holds the queue until completion.

After ``queue_synchronize`` returns, every enqueued communication is done.
"""

import itertools

from . import p2p
from .comm import STREAM
from .errors import ErrorCode, StreamixError
from .execqueue import ExecQueue
from .stream import EXEC_QUEUE

_enq_ids = itertools.count(1)


def exec_queue_create(name=None) -> ExecQueue:
    return ExecQueue(name)


def exec_queue_destroy(queue: ExecQueue) -> None:
    queue.destroy()


def queue_synchronize(queue: ExecQueue, timeout=None) -> None:
    queue.synchronize(timeout)


def enqueue_task(queue: ExecQueue, task, label=None):
    """Run ``task()`` on the queue after all earlier items."""
    return queue.submit(task, label)


class EnqueuedRequest:
    """Request returned by ``isend_enqueue``/``irecv_enqueue``.

    The fabric request behind it only exists once the queue worker has
    run the registering item.
    """

    def __init__(self, kind, queue, stream_id):
        self.req_id = next(_enq_ids)
        self.kind = kind
        self.queue = queue
        self.stream_id = stream_id
        self.inner = None
        self.status = None
        self.waited = False

    @property
    def registered(self):
        return self.inner is not None

    @property
    def complete(self):
        return self.inner is not None and self.inner.complete

    def __repr__(self):
        return f"<EnqueuedRequest {self.req_id} {self.kind} queue={self.queue.queue_id}>"


def _queue_of(comm):
    if comm.kind != STREAM or comm.local_streams[0].kind != EXEC_QUEUE:
        raise StreamixError(
            ErrorCode.NOT_ENQUEUE_COMM, "need a stream communicator with a queue stream"
        )
    return comm.local_streams[0].queue


def send_enqueue(buf, count, dtype, dest, tag, comm, label=None) -> None:
    queue = _queue_of(comm)
    queue.submit(lambda: p2p.send(buf, count, dtype, dest, tag, comm), label)


def recv_enqueue(buf, capacity, dtype, source, tag, comm, status=None, label=None) -> None:
    """Enqueue a blocking receive.  Pass a list as ``status`` to collect the Status."""
    queue = _queue_of(comm)

    def run():
        st = p2p.recv(buf, capacity, dtype, source, tag, comm)
        if status is not None:
            status.append(st)

    queue.submit(run, label)


def _register(kind, comm, post, label):
    queue = _queue_of(comm)
    req = EnqueuedRequest(kind, queue, comm.local_streams[0].stream_id)

    def run():
        req.inner = post()

    queue.submit(run, label)
    return req


def isend_enqueue(buf, count, dtype, dest, tag, comm, label=None) -> EnqueuedRequest:
    return _register("send", comm, lambda: p2p.isend(buf, count, dtype, dest, tag, comm), label)


def irecv_enqueue(buf, capacity, dtype, source, tag, comm, label=None) -> EnqueuedRequest:
    return _register(
        "recv", comm, lambda: p2p.irecv(buf, capacity, dtype, source, tag, comm), label
    )


def _common_queue(reqs):
    if not reqs:
        raise StreamixError(ErrorCode.INVALID_REQUEST, "no requests")
    for r in reqs:
        if not isinstance(r, EnqueuedRequest):
            raise StreamixError(ErrorCode.STREAM_MISMATCH, f"{r!r} was not enqueued")
        if r.waited:
            raise StreamixError(ErrorCode.INVALID_REQUEST, repr(r))
    queue = reqs[0].queue
    if any(r.queue is not queue for r in reqs):
        raise StreamixError(ErrorCode.STREAM_MISMATCH, "requests span several streams")
    return queue


def waitall_enqueue(reqs, label=None) -> None:
    reqs = list(reqs)
    queue = _common_queue(reqs)
    for r in reqs:
        r.waited = True

    def run():
        statuses = p2p.waitall([r.inner for r in reqs])
        for r, st in zip(reqs, statuses):
            r.status = st

    queue.submit(run, label)


def wait_enqueue(req, label=None) -> None:
    waitall_enqueue([req], label)
