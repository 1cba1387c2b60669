"""streamix: explicit serial-execution-context streams for a message-passing runtime."""

from .comm import (
    LEGACY,
    MULTIPLEX,
    STREAM,
    UNDEFINED,
    Communicator,
    allgather,
    barrier,
    comm_dup,
    comm_free,
    comm_split,
    stream_comm_create,
    stream_comm_create_multiple,
)
from .enqueue import (
    EnqueuedRequest,
    enqueue_task,
    exec_queue_create,
    exec_queue_destroy,
    irecv_enqueue,
    isend_enqueue,
    queue_synchronize,
    recv_enqueue,
    send_enqueue,
    wait_enqueue,
    waitall_enqueue,
)
from .errors import ErrorCode, StreamixError
from .execqueue import ExecQueue
from .fabric import (
    ANY_INDEX,
    ANY_SOURCE,
    ANY_TAG,
    Envelope,
    FabricConfig,
    decode_frame,
    encode_frame,
    progress_poll,
)
from .info import Info, info_get_hex, info_set_hex
from .p2p import (
    BYTE,
    DOUBLE,
    FLOAT,
    INT,
    Datatype,
    irecv,
    isend,
    recv,
    send,
    stream_irecv,
    stream_isend,
    stream_recv,
    stream_send,
    wait,
    waitall,
)
from .request import Request, Status
from .runtime import Process, World
from .stream import STREAM_NULL, Stream, stream_create, stream_free

__version__ = "0.1.0"
