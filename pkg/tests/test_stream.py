import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

import streamix as sx
from streamix import fabric
from streamix.errors import ErrorCode, StreamixError
from streamix.fabric import FabricConfig
from streamix.stream import EXEC_QUEUE, SERIAL_CONTEXT


def proc_with(explicit, implicit=1, **kw):
    return sx.World(1, FabricConfig(implicit, explicit, **kw))[0]


def code(excinfo):
    return excinfo.value.code


def test_create_until_pool_exhausted():
    proc = proc_with(2)
    a, b = sx.stream_create(proc), sx.stream_create(proc)
    assert a.kind == b.kind == SERIAL_CONTEXT
    assert a.stream_id != b.stream_id
    with pytest.raises(StreamixError) as exc:
        sx.stream_create(proc)
    assert code(exc) is ErrorCode.POOL_EXHAUSTED


def test_default_stream_is_exclusive_and_lock_free():
    proc = proc_with(1)
    s = sx.stream_create(proc)
    assert s.endpoint.exclusive_holder
    assert s.endpoint.exclusion == fabric.NONE and s.endpoint.lock is None


def test_exec_queue_hint():
    proc = proc_with(2)
    q = sx.exec_queue_create()
    try:
        info = sx.Info()
        info.set("type", "exec_queue")
        sx.info_set_hex(info, "value", q.handle)
        s = sx.stream_create(proc, info)
        assert s.kind == EXEC_QUEUE and s.queue is q
        # queue streams never take an endpoint exclusively
        assert not s.endpoint.exclusive_holder and s.endpoint.lock is not None
        sx.stream_free(s)
    finally:
        sx.exec_queue_destroy(q)


def test_shared_hint_single_endpoint():
    proc = proc_with(1)
    info = sx.Info({"endpoint_policy": "shared"})
    streams = [sx.stream_create(proc, info) for _ in range(3)]
    assert [s.endpoint.pool_index for s in streams] == [0, 0, 0]
    assert streams[0].endpoint.shared_holders == 3


@pytest.mark.parametrize("entries", [
    {"type": "gpu_stream", "value": "00"},
    {"type": "exec_queue", "value": "xyz"},
    {"type": "exec_queue", "value": "ffffffffffffffff"},
    {"type": "exec_queue"},
    {"endpoint_policy": "sometimes"},
])
def test_bad_hints(entries):
    proc = proc_with(2)
    with pytest.raises(StreamixError) as exc:
        sx.stream_create(proc, sx.Info(entries))
    assert code(exc) is ErrorCode.BAD_HINT
    # nothing leaked
    assert len(proc.fabric.free_explicit()) == 2


def test_free_then_create_reuses_endpoint():
    proc = proc_with(1)
    s = sx.stream_create(proc)
    ep = s.endpoint
    sx.stream_free(s)
    s2 = sx.stream_create(proc)
    assert s2.endpoint is ep
    # ids are retired, never handed out again
    assert s2.stream_id != s.stream_id


def test_free_null_and_double_free():
    proc = proc_with(1)
    with pytest.raises(StreamixError) as exc:
        sx.stream_free(sx.STREAM_NULL)
    assert code(exc) is ErrorCode.INVALID_STREAM
    s = sx.stream_create(proc)
    sx.stream_free(s)
    with pytest.raises(StreamixError) as exc:
        sx.stream_free(s)
    assert code(exc) is ErrorCode.INVALID_STREAM


def test_refcount_walkthrough():
    world = sx.World(2, FabricConfig(1, 1))

    def body(proc):
        s = sx.stream_create(proc)
        c = sx.stream_comm_create(proc.comm_world, s)
        assert s.refcount == 1
        with pytest.raises(StreamixError) as exc:
            sx.stream_free(s)
        assert code(exc) is ErrorCode.IN_USE
        sx.comm_free(c)
        assert s.refcount == 0
        sx.stream_free(s)
        return proc.fabric.free_explicit() == proc.fabric.explicit

    assert world.run(body) == [True, True]


def test_same_stream_on_two_communicators():
    world = sx.World(2, FabricConfig(1, 1))

    def body(proc):
        s = sx.stream_create(proc)
        c1 = sx.stream_comm_create(proc.comm_world, s)
        c2 = sx.stream_comm_create(proc.comm_world, s)
        assert s.refcount == 2 and c1.context_id != c2.context_id
        buf1, buf2 = bytearray(1), bytearray(1)
        if proc.rank == 0:
            sx.send(b"2", 1, sx.BYTE, 1, 0, c2)
            sx.send(b"1", 1, sx.BYTE, 1, 0, c1)
        else:
            sx.recv(buf1, 1, sx.BYTE, 0, 0, c1)
            sx.recv(buf2, 1, sx.BYTE, 0, 0, c2)
        sx.comm_free(c1)
        with pytest.raises(StreamixError):
            sx.stream_free(s)
        sx.comm_free(c2)
        sx.stream_free(s)
        return bytes(buf1 + buf2)

    assert world.run(body)[1] == b"12"


def test_free_shared_stream_ignores_other_sharers_receives():
    world = sx.World(2, FabricConfig(1, 1))
    shared = sx.Info({"endpoint_policy": "shared"})

    def body(proc):
        a, b = sx.stream_create(proc, shared), sx.stream_create(proc, shared)
        c = sx.stream_comm_create(proc.comm_world, b)
        buf = bytearray(1)
        req = sx.irecv(buf, 1, sx.BYTE, 1 - proc.rank, 0, c)
        sx.stream_free(a)  # a has no operations of its own
        sx.send(b"k", 1, sx.BYTE, 1 - proc.rank, 0, c)
        sx.wait(req)
        sx.comm_free(c)
        sx.stream_free(b)
        return proc.fabric.free_explicit() == proc.fabric.explicit

    assert world.run(body) == [True, True]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_create_free_permutations_leave_pool_reusable(n):
    proc = proc_with(4)
    for order in itertools.permutations(range(n)):
        streams = [sx.stream_create(proc) for _ in range(n)]
        ids = [s.stream_id for s in streams]
        assert len(set(ids)) == n
        for k in order:
            sx.stream_free(streams[k])
        assert proc.fabric.free_explicit() == proc.fabric.explicit
        assert not proc.streams
        # the whole pool can be taken again
        again = [sx.stream_create(proc) for _ in range(4)]
        assert {s.endpoint.pool_index for s in again} == {0, 1, 2, 3}
        assert min(s.stream_id for s in again) > max(ids)
        for s in again:
            sx.stream_free(s)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 7)), max_size=30))
def test_random_create_free_sequences_never_leak(script):
    proc = proc_with(3)
    live = []
    for create, pick in script:
        if create:
            try:
                live.append(sx.stream_create(proc))
            except StreamixError as exc:
                assert exc.code is ErrorCode.POOL_EXHAUSTED and len(live) == 3
        elif live:
            sx.stream_free(live.pop(pick % len(live)))
        held = {s.endpoint.pool_index for s in live}
        assert len(held) == len(live)
        assert len(proc.fabric.free_explicit()) == 3 - len(live)


def test_stream_null_matches_legacy_behaviour():
    """STREAM_NULL stream comms and legacy comms give identical match outcomes."""
    script = [
        ("s", 0, 5, b"a"), ("s", 0, 5, b"b"), ("r", 1, 5), ("s", 1, 6, b"c"),
        ("r", 0, sx.ANY_TAG), ("r", 1, sx.ANY_TAG), ("s", 0, 7, b"d"), ("r", 1, 7),
    ]

    def run(make):
        world = sx.World(2, FabricConfig(2, 0))
        comms = world.run(make)
        outcome = []
        for ev in script:
            if ev[0] == "s":
                _, src, tag, data = ev
                sx.isend(data, 1, sx.BYTE, 1 - src, tag, comms[src])
            else:
                _, me, tag = ev
                buf = bytearray(1)
                st_ = sx.wait(sx.irecv(buf, 1, sx.BYTE, sx.ANY_SOURCE, tag, comms[me]))
                outcome.append((me, bytes(buf), st_.source, st_.tag, st_.count))
        return outcome

    legacy = run(lambda p: sx.comm_dup(p.comm_world))
    null = run(lambda p: sx.stream_comm_create(p.comm_world, sx.STREAM_NULL))
    assert legacy == null
    assert [o[1] for o in legacy] == [b"a", b"c", b"b", b"d"]
