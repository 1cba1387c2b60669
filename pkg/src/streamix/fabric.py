"""Endpoint pool, loopback wire framing, tag matching and progress.

Every logical process owns a :class:`Fabric`, i.e. a pool of endpoints
(VCIs).  An endpoint holds a posted-receive queue, an unexpected-message
queue and one inbound channel.  The inbound channel is a ``deque`` of
encoded frames; remote senders append to it and only the agent holding the
endpoint's exclusion drains it.
"""

import collections
import itertools
import os
import struct
import threading
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import ErrorCode, StreamixError
from .request import Status

ANY_SOURCE = -2
ANY_TAG = -1
ANY_INDEX = -2
NO_INDEX = -1

IMPLICIT = "implicit"
EXPLICIT = "explicit"
EXCLUSIVE = "exclusive"
SHARED = "shared"

GLOBAL = "global"
PER_ENDPOINT = "per_endpoint"
NONE = "none"

ONE_TO_ONE = "one_to_one"
SENDER_ANY_RECV_DEFAULT = "sender_any_recv_default"

SENDER = "sender"
RECEIVER = "receiver"

MAX_POOL_SIZE = 64

ENV_IMPLICIT = "STREAMIX_IMPLICIT_VCIS"
ENV_EXPLICIT = "STREAMIX_EXPLICIT_VCIS"
ENV_EXCLUSION = "STREAMIX_EXCLUSION"


# --------------------------------------------------------------------------
# wire format

HEADER = struct.Struct("<IIiiiQQ")


class Envelope(NamedTuple):
    context_id: int
    src_rank: int
    src_idx: int
    dst_idx: int
    tag: int
    seq: int
    payload_len: int


def encode_frame(env: Envelope, payload=b"") -> bytes:
    return HEADER.pack(*env) + bytes(payload)


def decode_frame(frame: bytes):
    """Split a frame into its envelope and payload bytes."""
    env = Envelope._make(HEADER.unpack_from(frame))
    payload = frame[HEADER.size:]
    if len(payload) != env.payload_len:
        raise ValueError(
            f"frame carries {len(payload)} payload bytes, header says {env.payload_len}"
        )
    return env, payload


# --------------------------------------------------------------------------
# configuration


def _env_int(name):
    value = os.environ.get(name)
    return None if value in (None, "") else int(value)


@dataclass
class FabricConfig:
    """Pool sizes and locking regime for one logical process.

    Fields left as ``None`` are taken from the ``STREAMIX_*`` environment
    variables, then from the defaults.  Explicit arguments always win.
    """

    implicit_pool_size: Optional[int] = None
    explicit_pool_size: Optional[int] = None
    exclusion_mode: Optional[str] = None
    implicit_policy: str = ONE_TO_ONE
    max_pool_size: int = MAX_POOL_SIZE
    debug_serial: bool = False

    def __post_init__(self):
        if self.implicit_pool_size is None:
            self.implicit_pool_size = _env_int(ENV_IMPLICIT) or 1
        if self.explicit_pool_size is None:
            env = _env_int(ENV_EXPLICIT)
            self.explicit_pool_size = 0 if env is None else env
        if self.exclusion_mode is None:
            self.exclusion_mode = os.environ.get(ENV_EXCLUSION) or PER_ENDPOINT
        self.validate()

    def validate(self):
        def bad(msg):
            raise StreamixError(ErrorCode.CONFIG_INVALID, msg)

        if self.implicit_pool_size < 1:
            bad("implicit_pool_size must be >= 1")
        if self.explicit_pool_size < 0:
            bad("explicit_pool_size must be >= 0")
        if self.implicit_pool_size + self.explicit_pool_size > self.max_pool_size:
            bad(f"total pool size exceeds {self.max_pool_size}")
        if self.exclusion_mode not in (GLOBAL, PER_ENDPOINT):
            bad(f"unknown exclusion mode {self.exclusion_mode!r}")
        if self.implicit_policy not in (ONE_TO_ONE, SENDER_ANY_RECV_DEFAULT):
            bad(f"unknown implicit policy {self.implicit_policy!r}")


# --------------------------------------------------------------------------
# endpoints


class SerialGuard:
    """Lock stand-in for exclusively owned endpoints in debug mode.

    It performs no blocking; it records the entering agent and raises if a
    second agent enters while the first is still inside.
    """

    def __init__(self):
        self.owner = None
        self.last_agent = None

    def acquire(self):
        me = threading.get_ident()
        if self.owner is not None and self.owner != me:
            raise StreamixError(
                ErrorCode.SERIAL_VIOLATION,
                f"agent {me} entered while agent {self.owner} is inside",
            )
        self.owner = me
        self.last_agent = me

    def release(self):
        self.owner = None


class Endpoint:
    __slots__ = (
        "endpoint_id", "pool_class", "pool_index", "posted", "unexpected",
        "inbound", "lock", "exclusion", "exclusive_holder", "shared_holders",
        "frames_sent", "frames_received", "polls",
    )

    def __init__(self, endpoint_id, pool_class, pool_index):
        self.endpoint_id = endpoint_id
        self.pool_class = pool_class
        self.pool_index = pool_index
        self.posted = []
        self.unexpected = []
        # multi-producer, single-consumer; deque append/popleft are atomic
        self.inbound = collections.deque()
        self.lock = None
        self.exclusion = NONE
        self.exclusive_holder = False
        self.shared_holders = 0
        self.frames_sent = 0
        self.frames_received = 0
        self.polls = 0

    def pending_receives(self, match_ctx=None):
        if match_ctx is None:
            return len(self.posted)
        return sum(1 for r in self.posted if r.match_ctx == match_ctx)

    def __repr__(self):
        return (
            f"<Endpoint {self.endpoint_id} {self.pool_class}[{self.pool_index}] "
            f"{self.exclusion}>"
        )


class Fabric:
    """The endpoint pool of one logical process."""

    def __init__(self, config: FabricConfig):
        config.validate()
        self.config = config
        self.global_lock = threading.Lock()
        self._pool_lock = threading.Lock()
        self.implicit = [
            Endpoint(i, IMPLICIT, i) for i in range(config.implicit_pool_size)
        ]
        base = config.implicit_pool_size
        self.explicit = [
            Endpoint(base + i, EXPLICIT, i) for i in range(config.explicit_pool_size)
        ]
        self.endpoints = self.implicit + self.explicit
        for ep in self.endpoints:
            self._set_shared_exclusion(ep)
        self._rr_explicit = 0
        self._rr_implicit = 0
        self._sender_rotation = itertools.count()

    def _set_shared_exclusion(self, ep):
        if self.config.exclusion_mode == GLOBAL:
            ep.lock = self.global_lock
            ep.exclusion = GLOBAL
        else:
            ep.lock = threading.Lock()
            ep.exclusion = PER_ENDPOINT

    # -- acquisition -------------------------------------------------------

    def endpoint_acquire(self, pool_class=EXPLICIT, mode=EXCLUSIVE) -> Endpoint:
        """Hand out an endpoint.

        Exclusive endpoints are taken from the explicit pool and run with no
        locking (their owner promises a serial context).  Shared endpoints
        rotate round-robin over the pool and keep the configured locking.
        """
        with self._pool_lock:
            if pool_class == IMPLICIT:
                if mode != SHARED:
                    raise StreamixError(
                        ErrorCode.CONFIG_INVALID, "implicit endpoints can only be shared"
                    )
                ep = self.implicit[self._rr_implicit % len(self.implicit)]
                self._rr_implicit += 1
                ep.shared_holders += 1
                return ep
            if not self.explicit:
                raise StreamixError(ErrorCode.NO_EXPLICIT_POOL)
            if mode == EXCLUSIVE:
                for ep in self.explicit:
                    if not ep.exclusive_holder and ep.shared_holders == 0:
                        ep.exclusive_holder = True
                        if self.config.debug_serial:
                            ep.lock, ep.exclusion = SerialGuard(), NONE
                        else:
                            ep.lock, ep.exclusion = None, NONE
                        return ep
                raise StreamixError(ErrorCode.POOL_EXHAUSTED)
            if mode == SHARED:
                n = len(self.explicit)
                for step in range(n):
                    ep = self.explicit[(self._rr_explicit + step) % n]
                    if not ep.exclusive_holder:
                        self._rr_explicit = ep.pool_index + 1
                        ep.shared_holders += 1
                        return ep
                raise StreamixError(
                    ErrorCode.POOL_EXHAUSTED, "every explicit endpoint is held exclusively"
                )
            raise ValueError(f"unknown acquire mode {mode!r}")

    def endpoint_release(self, ep: Endpoint) -> None:
        with self._pool_lock:
            if not ep.exclusive_holder and ep.shared_holders == 0:
                raise StreamixError(ErrorCode.INVALID_STREAM, f"{ep!r} is not held")
            # other sharers may own the posted receives; only the last holder waits
            last = ep.exclusive_holder or ep.shared_holders == 1
            if last and ep.posted:
                raise StreamixError(
                    ErrorCode.PENDING_OPS, f"{len(ep.posted)} receives outstanding"
                )
            if ep.exclusive_holder:
                ep.exclusive_holder = False
                self._set_shared_exclusion(ep)
            else:
                ep.shared_holders -= 1

    def free_explicit(self):
        return [ep for ep in self.explicit if not ep.exclusive_holder and ep.shared_holders == 0]

    # -- implicit hashing --------------------------------------------------

    def select_implicit_endpoint(self, context_id, role, policy=None) -> int:
        """Index into the implicit pool for traffic on ``context_id``."""
        return select_implicit_endpoint(
            policy or self.config.implicit_policy,
            context_id,
            role,
            len(self.implicit),
            self._sender_rotation,
        )


def select_implicit_endpoint(policy, context_id, role, pool_size, rotation=None):
    if policy == ONE_TO_ONE:
        return context_id % pool_size
    if policy == SENDER_ANY_RECV_DEFAULT:
        if role == RECEIVER:
            return 0
        if rotation is None:
            return 0
        return next(rotation) % pool_size
    raise StreamixError(ErrorCode.CONFIG_INVALID, f"unknown implicit policy {policy!r}")


# --------------------------------------------------------------------------
# matching


def _deliver(req, env, payload):
    n = env.payload_len
    truncated = n > req.capacity
    if truncated:
        n = req.capacity
    if n:
        req.view[:n] = payload[:n]
    req.status = Status(
        source=env.src_rank,
        tag=env.tag,
        count=n,
        truncated=truncated,
        source_index=None if env.src_idx == NO_INDEX else env.src_idx,
    )
    req.complete = True


def route_and_match(ep: Endpoint, env: Envelope, payload):
    """Match an arrived message against the posted queue, in post order.

    Returns the completed receive request, or None when the message was
    parked on the unexpected queue.  Caller holds the endpoint exclusion.
    """
    ctx, src, sidx, didx, tag = env.context_id, env.src_rank, env.src_idx, env.dst_idx, env.tag
    posted = ep.posted
    for i, r in enumerate(posted):
        if (
            r.match_ctx == ctx
            and r.dst_idx == didx
            and (r.source == src or r.source == ANY_SOURCE)
            and (r.tag == tag or r.tag == ANY_TAG)
            and (r.src_idx == sidx or r.src_idx == ANY_INDEX)
        ):
            del posted[i]
            _deliver(r, env, payload)
            return r
    ep.unexpected.append((env, payload))
    return None


def post_receive(ep: Endpoint, req) -> bool:
    """Match a new receive against the unexpected queue, in arrival order.

    Returns True when it completed immediately; otherwise it is appended
    to the posted queue.  Caller holds the endpoint exclusion.
    """
    ctx, src, sidx, didx, tag = req.match_ctx, req.source, req.src_idx, req.dst_idx, req.tag
    unexpected = ep.unexpected
    for i, (env, payload) in enumerate(unexpected):
        if (
            env.context_id == ctx
            and env.dst_idx == didx
            and (src == env.src_rank or src == ANY_SOURCE)
            and (tag == env.tag or tag == ANY_TAG)
            and (sidx == env.src_idx or sidx == ANY_INDEX)
        ):
            del unexpected[i]
            _deliver(req, env, payload)
            return True
    ep.posted.append(req)
    return False


def drain(ep: Endpoint) -> int:
    """Move every frame waiting on the inbound channel through matching.

    Caller holds the endpoint exclusion.
    """
    inbound = ep.inbound
    n = 0
    while inbound:
        frame = inbound.popleft()
        env = Envelope._make(HEADER.unpack_from(frame))
        route_and_match(ep, env, frame[HEADER.size:])
        n += 1
    ep.frames_received += n
    return n


def progress_poll(endpoints) -> int:
    """Nonblocking progress over ``endpoints``; returns frames processed."""
    total = 0
    for ep in endpoints:
        lock = ep.lock
        if lock is None:
            ep.polls += 1
            total += drain(ep)
        else:
            lock.acquire()
            try:
                ep.polls += 1
                total += drain(ep)
            finally:
                lock.release()
    return total


def purge_context(ep: Endpoint, match_ctxs) -> int:
    """Drop unexpected messages for retired contexts; returns how many."""
    keep = [item for item in ep.unexpected if item[0].context_id not in match_ctxs]
    dropped = len(ep.unexpected) - len(keep)
    ep.unexpected[:] = keep
    return dropped
