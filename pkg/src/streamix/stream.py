"""Stream objects: explicit serial execution contexts bound to endpoints."""

from . import fabric
from .errors import ErrorCode, StreamixError
from .execqueue import lookup_queue
from .info import Info, info_get_hex

SERIAL_CONTEXT = "serial_context"
EXEC_QUEUE = "exec_queue"
NULL = "null"

HINT_TYPE = "type"
HINT_VALUE = "value"
HINT_ENDPOINT_POLICY = "endpoint_policy"


class Stream:
    def __init__(self, stream_id, kind, proc=None, endpoint=None, queue=None):
        self.stream_id = stream_id
        self.kind = kind
        self.proc = proc
        self.endpoint = endpoint
        self.queue = queue
        self.refcount = 0
        self.freed = False

    @property
    def is_null(self):
        return self.kind == NULL

    def __repr__(self):
        if self.is_null:
            return "STREAM_NULL"
        where = self.endpoint.pool_index if self.endpoint is not None else None
        return f"<Stream {self.stream_id} {self.kind} endpoint={where}>"


#: Operations on the null stream behave like conventional ones: implicit
#: endpoint selection under the configured locking.
STREAM_NULL = Stream(0, NULL)


def _parse_hints(info):
    kind, queue, policy = SERIAL_CONTEXT, None, fabric.EXCLUSIVE
    if info is None:
        return kind, queue, policy
    if HINT_ENDPOINT_POLICY in info:
        policy = info.get(HINT_ENDPOINT_POLICY)
        if policy not in (fabric.EXCLUSIVE, fabric.SHARED):
            raise StreamixError(ErrorCode.BAD_HINT, f"endpoint_policy={policy!r}")
    if HINT_TYPE in info:
        kind = info.get(HINT_TYPE)
        if kind != EXEC_QUEUE:
            raise StreamixError(ErrorCode.BAD_HINT, f"unknown stream type {kind!r}")
        try:
            queue = lookup_queue(info_get_hex(info, HINT_VALUE))
        except (StreamixError, KeyError) as exc:
            raise StreamixError(ErrorCode.BAD_HINT, "undecodable queue handle") from exc
        # queue streams are progressed by a worker, so they share endpoints
        policy = fabric.SHARED
    return kind, queue, policy


def stream_create(proc, info: Info = None) -> Stream:
    """Create a stream on ``proc``.

    With no hints the stream gets an exclusive explicit-pool endpoint and
    runs lock-free.  ``endpoint_policy="shared"`` assigns endpoints round
    robin instead; ``type="exec_queue"`` plus a hex ``value`` holding a
    queue handle wraps an :class:`~streamix.execqueue.ExecQueue`.
    """
    kind, queue, policy = _parse_hints(info)
    with proc.lock:
        endpoint = proc.fabric.endpoint_acquire(fabric.EXPLICIT, policy)
        stream = Stream(next(proc.stream_ids), kind, proc, endpoint, queue)
        proc.streams[stream.stream_id] = stream
    return stream


def stream_free(stream: Stream) -> None:
    if stream.is_null or stream.freed:
        raise StreamixError(ErrorCode.INVALID_STREAM, repr(stream))
    proc = stream.proc
    with proc.lock:
        if stream.refcount > 0:
            raise StreamixError(
                ErrorCode.IN_USE, f"{stream.refcount} communicators still attached"
            )
        proc.fabric.endpoint_release(stream.endpoint)
        stream.freed = True
        del proc.streams[stream.stream_id]


def check_stream(stream, proc, allow_null=True):
    if stream.is_null:
        if not allow_null:
            raise StreamixError(ErrorCode.INVALID_STREAM, "STREAM_NULL not allowed here")
        return
    if stream.freed or stream.proc is not proc:
        raise StreamixError(ErrorCode.INVALID_STREAM, repr(stream))

