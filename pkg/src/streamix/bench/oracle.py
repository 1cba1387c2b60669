"""Exhaustive check of message-matching order against a reference matcher.

A *direction program* is a sequence of sends issued by one rank plus a
sequence of receives posted by the other, together with one interleaving
of the two.  Each program is run on a fresh two-rank world; before posting
a receive the receiving rank polls its endpoint, so any message sent
earlier in the interleaving takes the unexpected-queue path and any
message sent later takes the posted-queue path.

The reference matcher keeps all pending sends and receives of a direction
in one list in event order: a send pairs with the earliest pending
receive that accepts it, a receive with the earliest pending send it
accepts.  Library and reference must produce the same pairing.

Matching at a rank only depends on what the peer sent and what the rank
posted, so both directions are run at once: run ``k`` executes program
``k`` from rank 0 to rank 1 and the same program mirrored from rank 1 to
rank 0, merged event by event.
"""

import itertools
import time
from dataclasses import dataclass, field
from typing import List, Tuple

from ..fabric import ANY_SOURCE, ANY_TAG, FabricConfig, progress_poll
from ..p2p import BYTE, irecv, isend
from ..runtime import World

SEND_TAGS = (0, 1)
RECV_TAGS = (0, 1, ANY_TAG)
PEER = "peer"
RECV_SOURCES = (PEER, ANY_SOURCE)

MAX_OPS = 6
MAX_PER_KIND = 3


@dataclass(frozen=True)
class Program:
    sends: Tuple[int, ...]  # tags
    recvs: Tuple[Tuple[int, object], ...]  # (tag pattern, source pattern)
    order: Tuple[str, ...]  # "s"/"r" per event

    def events(self):
        si = ri = 0
        for kind in self.order:
            if kind == "s":
                yield "s", si, self.sends[si]
                si += 1
            else:
                yield "r", ri, self.recvs[ri]
                ri += 1


@dataclass
class OracleReport:
    max_ops: int
    programs: int = 0
    runs: int = 0
    divergences: List[str] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def ok(self):
        return not self.divergences

    def summary(self):
        state = "OK" if self.ok else f"{len(self.divergences)} DIVERGENCES"
        return (
            f"oracle max_ops={self.max_ops}: {self.runs} interleavings of "
            f"{self.programs} programs, {state} ({self.elapsed_s:.1f}s)"
        )


def interleavings(n_sends, n_recvs):
    n = n_sends + n_recvs
    for pos in itertools.combinations(range(n), n_sends):
        chosen = set(pos)
        yield tuple("s" if i in chosen else "r" for i in range(n))


def enumerate_programs(max_ops):
    """Every direction program with at most ``max_ops`` operations."""
    if max_ops > MAX_OPS:
        raise ValueError(f"max_ops must be <= {MAX_OPS}")
    for ns in range(min(MAX_PER_KIND, max_ops) + 1):
        for nr in range(min(MAX_PER_KIND, max_ops - ns) + 1):
            if ns + nr == 0:
                continue
            for sends in itertools.product(SEND_TAGS, repeat=ns):
                for recvs in itertools.product(
                    itertools.product(RECV_TAGS, RECV_SOURCES), repeat=nr
                ):
                    for order in interleavings(ns, nr):
                        yield Program(sends, recvs, order)


# --------------------------------------------------------------------------
# reference


def _accepts(pattern, tag):
    want_tag, _source = pattern
    # every message in a direction comes from the single peer
    return want_tag == ANY_TAG or want_tag == tag


def reference_pairing(program: Program):
    """Map receive index -> send index, or None when unmatched."""
    queue = []  # pending ("s", idx, tag) / ("r", idx, pattern), event order
    pairs = {i: None for i in range(len(program.recvs))}
    for kind, idx, what in program.events():
        for j, (qkind, qidx, qwhat) in enumerate(queue):
            if qkind == kind:
                continue
            matched = _accepts(qwhat, what) if kind == "s" else _accepts(what, qwhat)
            if matched:
                del queue[j]
                if kind == "s":
                    pairs[qidx] = idx
                else:
                    pairs[idx] = qidx
                break
        else:
            queue.append((kind, idx, what))
    return pairs


# --------------------------------------------------------------------------
# library run


def library_pairings(programs):
    """Run up to two programs at once: ``programs[d]`` flows from rank d to 1-d."""
    world = World(2, FabricConfig(1, 0))
    comms = [p.comm_world for p in world.processes]
    streams = [list(p.events()) for p in programs]
    recv_reqs = [[] for _ in programs]
    merged = []
    for step in range(max(len(s) for s in streams)):
        for d, events in enumerate(streams):
            if step < len(events):
                merged.append((d, events[step]))
    for d, (kind, idx, what) in merged:
        sender, receiver = d, 1 - d
        if kind == "s":
            isend(bytes([idx]), 1, BYTE, receiver, what, comms[sender])
        else:
            tag, source = what
            comm = comms[receiver]
            progress_poll([comm.recv_endpoint()])
            src = sender if source == PEER else source
            buf = bytearray(1)
            recv_reqs[d].append((buf, irecv(buf, 1, BYTE, src, tag, comm)))
    for comm in comms:
        progress_poll([comm.recv_endpoint()])
    out = []
    for reqs in recv_reqs:
        out.append({i: (buf[0] if req.complete else None) for i, (buf, req) in enumerate(reqs)})
    return out


def check_programs(programs, report):
    programs = list(programs)
    for k, program in enumerate(programs):
        mirror = programs[(k + len(programs) // 2) % len(programs)]
        pair = (program, mirror)
        got = library_pairings(pair)
        for d, p in enumerate(pair):
            want = reference_pairing(p)
            if got[d] != want:
                report.divergences.append(
                    f"rank {d}->{1 - d} {p}: library {got[d]} reference {want}"
                )
        report.runs += 1
    return report


def check_program(sends, recvs):
    """All interleavings of one fixed program (both directions)."""
    recvs = tuple((t, PEER) if not isinstance(t, tuple) else t for t in recvs)
    report = OracleReport(max_ops=len(sends) + len(recvs))
    t0 = time.perf_counter()
    progs = [Program(tuple(sends), recvs, o) for o in interleavings(len(sends), len(recvs))]
    report.programs = 1
    check_programs(progs, report)
    report.elapsed_s = time.perf_counter() - t0
    return report


def run_interleaving_oracle(max_ops: int) -> OracleReport:
    report = OracleReport(max_ops=max_ops)
    t0 = time.perf_counter()
    progs = list(enumerate_programs(max_ops))
    report.programs = len({(p.sends, p.recvs) for p in progs})
    if progs:
        check_programs(progs, report)
    report.elapsed_s = time.perf_counter() - t0
    return report
