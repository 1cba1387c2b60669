"""Point-to-point operations on legacy, stream and multiplex communicators.

Sends are eager: the payload is framed and handed to the destination
endpoint's inbound channel before ``isend`` returns, so send requests are
born complete.  Receives complete when progress on the receiving endpoint
matches them.
"""

import enum
import os
import time

import numpy as np

from .errors import ErrorCode, StreamixError
from .fabric import ANY_INDEX, ANY_SOURCE, ANY_TAG, HEADER, NO_INDEX, post_receive, progress_poll
from .request import RECV, SEND, Request, Status

__all__ = [
    "ANY_SOURCE", "ANY_TAG", "ANY_INDEX", "Datatype", "BYTE", "INT", "FLOAT", "DOUBLE",
    "isend", "irecv", "send", "recv", "wait", "waitall",
    "stream_isend", "stream_irecv", "stream_send", "stream_recv",
]


class Datatype(enum.Enum):
    BYTE = (1, "u1")
    INT = (4, "<i4")
    FLOAT = (4, "<f4")
    DOUBLE = (8, "<f8")

    @property
    def size(self):
        return self.value[0]

    @property
    def numpy(self):
        return np.dtype(self.value[1])


BYTE, INT, FLOAT, DOUBLE = Datatype.BYTE, Datatype.INT, Datatype.FLOAT, Datatype.DOUBLE


def _byte_view(buf, nbytes, writable):
    view = memoryview(buf)
    if view.format != "B" or view.ndim != 1:
        view = view.cast("B")
    if writable and view.readonly:
        raise ValueError("receive buffer is read-only")
    if len(view) < nbytes:
        raise ValueError(f"buffer holds {len(view)} bytes, operation needs {nbytes}")
    return view


def _check_rank(comm, rank, wildcard=False):
    if wildcard and rank == ANY_SOURCE:
        return
    if not 0 <= rank < comm.size:
        raise StreamixError(ErrorCode.INVALID_RANK, f"{rank} not in [0, {comm.size})")


def post_send(comm, buf, count, dtype, dest, tag, ctx, src_i, dst_i):
    """Frame and inject one message; ``src_i``/``dst_i`` index the stream lists."""
    if count < 0:
        raise StreamixError(ErrorCode.INVALID_COUNT, str(count))
    _check_rank(comm, dest)
    nbytes = count * dtype.size
    payload = bytes(_byte_view(buf, nbytes, False)[:nbytes]) if nbytes else b""
    ep = comm._send_eps[src_i] or comm.implicit_send_endpoint()
    if comm.is_multiplex:
        wire_sidx, wire_didx = src_i, dst_i
    else:
        wire_sidx = wire_didx = NO_INDEX
    seq = next(comm._seq[src_i])
    frame = HEADER.pack(ctx, comm.rank, wire_sidx, wire_didx, tag, seq, nbytes) + payload
    channel = comm._inbound[dest][dst_i]
    lock = ep.lock
    if lock is None:
        channel.append(frame)
        ep.frames_sent += 1
    else:
        lock.acquire()
        try:
            channel.append(frame)
            ep.frames_sent += 1
        finally:
            lock.release()
    req = Request(SEND, comm._stream_ids[src_i], comm.context_id, ep)
    req.status = Status(comm.rank, tag, nbytes)
    req.complete = True
    return req


def post_recv(comm, buf, capacity, dtype, source, tag, ctx, dst_i, src_pattern=ANY_INDEX):
    """Post a receive on the endpoint of local stream ``dst_i``."""
    if capacity < 0:
        raise StreamixError(ErrorCode.INVALID_COUNT, str(capacity))
    _check_rank(comm, source, wildcard=True)
    nbytes = capacity * dtype.size
    ep = comm._recv_eps[dst_i]
    req = Request(RECV, comm._stream_ids[dst_i], comm.context_id, ep)
    req.view = _byte_view(buf, nbytes, True)
    req.capacity = nbytes
    req.match_ctx = ctx
    req.source = source
    req.tag = tag
    if comm.is_multiplex:
        req.src_idx, req.dst_idx = src_pattern, dst_i
    else:
        req.src_idx = req.dst_idx = NO_INDEX
    lock = ep.lock
    if lock is None:
        post_receive(ep, req)
    else:
        lock.acquire()
        try:
            post_receive(ep, req)
        finally:
            lock.release()
    return req


def _reject_multiplex(comm):
    if comm.freed:
        raise StreamixError(ErrorCode.INVALID_COMM, repr(comm))
    if comm.is_multiplex:
        raise StreamixError(ErrorCode.MULTIPLEX_COMM, "use stream_isend/stream_irecv")


def isend(buf, count, dtype, dest, tag, comm) -> Request:
    _reject_multiplex(comm)
    return post_send(comm, buf, count, dtype, dest, tag, comm.p2p_ctx, 0, 0)


def irecv(buf, capacity, dtype, source, tag, comm) -> Request:
    _reject_multiplex(comm)
    return post_recv(comm, buf, capacity, dtype, source, tag, comm.p2p_ctx, 0)


def send(buf, count, dtype, dest, tag, comm) -> Status:
    return wait(isend(buf, count, dtype, dest, tag, comm))


def recv(buf, capacity, dtype, source, tag, comm) -> Status:
    return wait(irecv(buf, capacity, dtype, source, tag, comm))


def _check_multiplex(comm):
    if comm.freed:
        raise StreamixError(ErrorCode.INVALID_COMM, repr(comm))
    if not comm.is_multiplex:
        raise StreamixError(ErrorCode.NOT_MULTIPLEX, repr(comm))


def _check_index(idx, count, what):
    if not 0 <= idx < count:
        raise StreamixError(ErrorCode.INVALID_INDEX, f"{what}={idx} not in [0, {count})")


def stream_isend(buf, count, dtype, dest, tag, comm, src_idx, dst_idx) -> Request:
    _check_multiplex(comm)
    _check_rank(comm, dest)
    _check_index(src_idx, comm.counts[comm.rank], "src_idx")
    _check_index(dst_idx, comm.counts[dest], "dst_idx")
    return post_send(comm, buf, count, dtype, dest, tag, comm.p2p_ctx, src_idx, dst_idx)


def stream_irecv(buf, capacity, dtype, source, tag, comm, src_idx, dst_idx) -> Request:
    _check_multiplex(comm)
    if dst_idx == ANY_INDEX:
        raise StreamixError(ErrorCode.WILDCARD_DST)
    _check_rank(comm, source, wildcard=True)
    _check_index(dst_idx, comm.counts[comm.rank], "dst_idx")
    if src_idx != ANY_INDEX:
        limit = max(comm.counts) if source == ANY_SOURCE else comm.counts[source]
        _check_index(src_idx, limit, "src_idx")
    return post_recv(comm, buf, capacity, dtype, source, tag, comm.p2p_ctx, dst_idx, src_idx)


def stream_send(buf, count, dtype, dest, tag, comm, src_idx, dst_idx) -> Status:
    return wait(stream_isend(buf, count, dtype, dest, tag, comm, src_idx, dst_idx))


def stream_recv(buf, capacity, dtype, source, tag, comm, src_idx, dst_idx) -> Status:
    return wait(stream_irecv(buf, capacity, dtype, source, tag, comm, src_idx, dst_idx))


def _check_waitable(req):
    if not isinstance(req, Request) or req.consumed:
        raise StreamixError(ErrorCode.INVALID_REQUEST, repr(req))


def wait(req: Request) -> Status:
    """Block until ``req`` completes, progressing only its own endpoint."""
    _check_waitable(req)
    if not req.complete:
        eps = (req.endpoint,)
        while not req.complete:
            # nothing arrived: give the CPU to the peer agent instead of
            # spinning out a full time slice when agents outnumber cores
            if not progress_poll(eps):
                os.sched_yield()
    req.consumed = True
    return req.status


def waitall(reqs):
    reqs = list(reqs)
    for r in reqs:
        _check_waitable(r)
    pending = [r for r in reqs if not r.complete]
    while pending:
        eps = list({id(r.endpoint): r.endpoint for r in pending}.values())
        if not progress_poll(eps):
            os.sched_yield()
        pending = [r for r in pending if not r.complete]
    for r in reqs:
        r.consumed = True
    return [r.status for r in reqs]
