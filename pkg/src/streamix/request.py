"""Request and status objects shared by the fabric and the p2p layer."""

import itertools
from dataclasses import dataclass
from typing import Optional

_req_ids = itertools.count(1)

SEND = "send"
RECV = "recv"


@dataclass
class Status:
    source: int
    tag: int
    count: int  # received length in bytes
    truncated: bool = False
    source_index: Optional[int] = None

    def get_count(self, dtype) -> int:
        return self.count // dtype.size


class Request:
    """Handle for a posted send or receive.

    A receive request doubles as its own posted-queue descriptor: the
    matching engine reads the pattern fields straight off it.
    """

    __slots__ = (
        "req_id", "kind", "complete", "consumed", "status",
        "stream_id", "context_id", "endpoint",
        "match_ctx", "source", "tag", "src_idx", "dst_idx",
        "view", "capacity",
    )

    def __init__(self, kind, stream_id, context_id, endpoint):
        self.req_id = next(_req_ids)
        self.kind = kind
        self.complete = False
        self.consumed = False
        self.status = None
        self.stream_id = stream_id
        self.context_id = context_id
        self.endpoint = endpoint

    @property
    def state(self):
        return "complete" if self.complete else "pending"

    def __repr__(self):
        return f"<Request {self.req_id} {self.kind} {self.state}>"
