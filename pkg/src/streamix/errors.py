"""Error codes raised by the runtime."""

import enum


class ErrorCode(enum.Enum):
    POOL_EXHAUSTED = "pool exhausted"
    NO_EXPLICIT_POOL = "no explicit endpoint pool"
    PENDING_OPS = "pending operations"
    IN_USE = "object still in use"
    INVALID_STREAM = "invalid stream"
    INVALID_COMM = "invalid communicator"
    BAD_HINT = "bad info hint"
    NOT_FOUND = "key not found"
    BAD_ENCODING = "bad hex encoding"
    EMPTY_LIST = "empty stream list"
    INVALID_RANK = "invalid rank"
    INVALID_COUNT = "invalid count"
    INVALID_INDEX = "invalid stream index"
    INVALID_REQUEST = "invalid request"
    MULTIPLEX_COMM = "operation not allowed on a multiplex communicator"
    NOT_MULTIPLEX = "communicator is not a multiplex stream communicator"
    WILDCARD_DST = "destination index may not be a wildcard"
    QUEUE_BUSY = "execution queue has pending items"
    NOT_ENQUEUE_COMM = "communicator has no execution-queue stream attached"
    STREAM_MISMATCH = "requests were not issued on the same stream"
    CONFIG_INVALID = "invalid configuration"
    SERIAL_VIOLATION = "concurrent entry into a serial context"


class StreamixError(Exception):
    """Raised by every runtime operation that fails; ``code`` says why."""

    def __init__(self, code, detail=None):
        self.code = code
        msg = code.value if detail is None else f"{code.value}: {detail}"
        super().__init__(msg)
