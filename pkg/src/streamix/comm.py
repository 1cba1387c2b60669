"""Communicators: legacy, single-stream and multiplex-stream.

Creation is collective over the parent.  Members exchange, in one
allgather, their free context-id mask and the endpoint(s) they will
receive on; the lowest context id free everywhere is taken.  Streams on
the parent are ignored, so nested creation never inherits them.
"""

import functools
import itertools
import json
import operator

from . import fabric, p2p
from .errors import ErrorCode, StreamixError
from .stream import STREAM_NULL, check_stream

LEGACY = "legacy"
STREAM = "stream"
MULTIPLEX = "multiplex"

MAX_CONTEXT_ID = 4095
UNDEFINED = None

COLL_TAG = 0
_COLL_CAPACITY = 1 << 16


def member_entry(proc, eps):
    """What one member contributes to a communicator's endpoint table."""
    config = proc.config
    return {"eps": eps, "implicit": [config.implicit_pool_size, config.implicit_policy]}


class Communicator:
    def __init__(self, proc, context_id, group, members, local_streams, kind):
        self.proc = proc
        self.context_id = context_id
        self.group = group
        self.kind = kind
        self.size = len(group)
        self.rank = group.index(proc.rank)
        self.local_streams = [s or STREAM_NULL for s in local_streams]
        self.freed = False
        # wire contexts: point-to-point traffic and collective traffic
        self.p2p_ctx = context_id << 1
        self.coll_ctx = self.p2p_ctx | 1

        self.counts = [len(m["eps"]) for m in members]
        self.table = [
            [self._resolve(m, i) for i in range(len(m["eps"]))] for m in members
        ]
        world = proc.world
        self._inbound = [
            [world.inbound(group[r], eid) for eid in row] for r, row in enumerate(self.table)
        ]
        fab = proc.fabric
        self._recv_eps = [fab.endpoints[eid] for eid in self.table[self.rank]]
        self._send_eps = [
            None if s.is_null else s.endpoint for s in self.local_streams
        ]
        self._stream_ids = [s.stream_id for s in self.local_streams]
        self._seq = [itertools.count(1) for _ in self.local_streams]

    def _resolve(self, member, index):
        eid = member["eps"][index]
        if eid is None:
            pool_size, policy = member["implicit"]
            eid = fabric.select_implicit_endpoint(
                policy, self.context_id, fabric.RECEIVER, pool_size
            )
        return eid

    @property
    def is_multiplex(self):
        return self.kind == MULTIPLEX

    def implicit_send_endpoint(self):
        fab = self.proc.fabric
        return fab.implicit[fab.select_implicit_endpoint(self.context_id, fabric.SENDER)]

    def send_endpoint(self, index=0):
        return self._send_eps[index] or self.implicit_send_endpoint()

    def recv_endpoint(self, index=0):
        return self._recv_eps[index]

    def endpoint_of(self, rank, index=0):
        """Endpoint id that ``rank`` receives on for stream ``index``."""
        return self.table[rank][index]

    def __repr__(self):
        return (
            f"<Communicator ctx={self.context_id} {self.kind} "
            f"rank={self.rank}/{self.size}>"
        )


# --------------------------------------------------------------------------
# collectives over point-to-point


def _exchange(comm, payload: bytes):
    """Every member sends ``payload`` to every other; returns all payloads by rank."""
    n, me = comm.size, comm.rank
    out = [None] * n
    out[me] = bytes(payload)
    if n == 1:
        return out
    peers = [r for r in range(n) if r != me]
    bufs = [bytearray(_COLL_CAPACITY) for _ in peers]
    reqs = [
        p2p.post_recv(comm, buf, len(buf), p2p.BYTE, r, COLL_TAG, comm.coll_ctx, 0, 0)
        for r, buf in zip(peers, bufs)
    ]
    reqs += [
        p2p.post_send(comm, payload, len(payload), p2p.BYTE, r, COLL_TAG, comm.coll_ctx, 0, 0)
        for r in peers
    ]
    statuses = p2p.waitall(reqs)
    for r, buf, status in zip(peers, bufs, statuses):
        if status.truncated:
            raise StreamixError(ErrorCode.INVALID_COUNT, "collective payload too large")
        out[r] = bytes(buf[: status.count])
    return out


def allgather(comm, obj):
    """Gather a JSON-serialisable ``obj`` from every member, ordered by rank."""
    data = json.dumps(obj, separators=(",", ":")).encode()
    return [json.loads(b) for b in _exchange(comm, data)]


def barrier(comm) -> None:
    """No member returns before every member has entered.

    Runs on the communicator's own endpoints, i.e. in the attached stream's
    context for stream communicators.
    """
    _check_live(comm)
    _exchange(comm, b"")


# --------------------------------------------------------------------------
# construction


def _check_live(comm):
    if comm.freed:
        raise StreamixError(ErrorCode.INVALID_COMM, repr(comm))


def _agree(parent, entry):
    proc = parent.proc
    entry = dict(entry, mask=format(proc.free_contexts, "x"))
    gathered = allgather(parent, entry)
    mask = functools.reduce(operator.and_, (int(e["mask"], 16) for e in gathered))
    return mask, gathered


def _take_context(proc, mask):
    if not mask:
        raise StreamixError(ErrorCode.CONFIG_INVALID, "out of context ids")
    ctx = (mask & -mask).bit_length() - 1
    with proc.lock:
        proc.free_contexts &= ~(1 << ctx)
    return ctx


def _create(parent, streams, kind):
    _check_live(parent)
    proc = parent.proc
    eps = [None if s.is_null else s.endpoint.endpoint_id for s in streams]
    mask, members = _agree(parent, member_entry(proc, eps))
    ctx = _take_context(proc, mask)
    comm = Communicator(proc, ctx, list(parent.group), members, list(streams), kind)
    with proc.lock:
        for s in streams:
            if not s.is_null:
                s.refcount += 1
    return comm


def comm_dup(parent):
    """A new legacy communicator over the same group (implicit endpoints)."""
    return _create(parent, [STREAM_NULL], LEGACY)


def comm_split(parent, color, key=0):
    """Legacy sub-communicators by ``color``; ``UNDEFINED`` opts out."""
    _check_live(parent)
    proc = parent.proc
    entry = member_entry(proc, [None])
    entry.update(color=color, key=key)
    mask, members = _agree(parent, entry)
    ctx = _take_context(proc, mask)
    if color is UNDEFINED:
        with proc.lock:
            proc.free_contexts |= 1 << ctx
        return None
    chosen = sorted(
        (m["key"], r) for r, m in enumerate(members) if m["color"] == color
    )
    group = [parent.group[r] for _, r in chosen]
    return Communicator(proc, ctx, group, [members[r] for _, r in chosen], [None], LEGACY)


def stream_comm_create(parent, stream=STREAM_NULL):
    """Collectively build a communicator with one local stream per member.

    Members may pass different streams, including ``STREAM_NULL``.
    """
    check_stream(stream, parent.proc)
    return _create(parent, [stream], STREAM)


def stream_comm_create_multiple(parent, streams):
    """Collectively build a multiplex communicator; list lengths may differ per member."""
    streams = list(streams)
    if not streams:
        raise StreamixError(ErrorCode.EMPTY_LIST)
    for s in streams:
        check_stream(s, parent.proc, allow_null=False)
    return _create(parent, streams, MULTIPLEX)


def comm_free(comm) -> None:
    _check_live(comm)
    if comm.context_id == 0:
        raise StreamixError(ErrorCode.INVALID_COMM, "the world communicator cannot be freed")
    ctxs = (comm.p2p_ctx, comm.coll_ctx)
    eps = list({id(ep): ep for ep in comm._recv_eps}.values())
    # pull in anything already sent to us before deciding what is pending
    fabric.progress_poll(eps)
    pending = sum(ep.pending_receives(c) for ep in eps for c in ctxs)
    if pending:
        raise StreamixError(ErrorCode.PENDING_OPS, f"{pending} receives outstanding")
    proc = comm.proc
    for ep in eps:
        lock = ep.lock
        if lock is not None:
            lock.acquire()
        try:
            fabric.purge_context(ep, ctxs)
        finally:
            if lock is not None:
                lock.release()
    with proc.lock:
        for s in comm.local_streams:
            if not s.is_null:
                s.refcount -= 1
        proc.free_contexts |= 1 << comm.context_id
    comm.freed = True
