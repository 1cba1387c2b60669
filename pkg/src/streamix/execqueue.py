"""Simulated device execution queue (a GPU-stream stand-in).

Each queue owns one worker thread that runs submitted items strictly in
submission order.  Items are plain callables; an item that blocks holds the
whole queue, exactly like a kernel occupying a device stream.
"""

import collections
import itertools
import threading

from .errors import ErrorCode, StreamixError

_queue_ids = itertools.count(1)
_registry = {}
_registry_lock = threading.Lock()

HANDLE_BYTES = 8

QUEUED = "queued"
RUNNING = "running"
DONE = "done"


def lookup_queue(handle: bytes) -> "ExecQueue":
    """Resolve an opaque queue handle (as passed through an info hint)."""
    if len(handle) != HANDLE_BYTES:
        raise KeyError(handle)
    queue_id = int.from_bytes(handle, "little")
    with _registry_lock:
        return _registry[queue_id]


class ExecQueue:
    def __init__(self, name=None):
        self.queue_id = next(_queue_ids)
        self.name = name or f"execqueue-{self.queue_id}"
        self._items = collections.deque()
        self._cv = threading.Condition()
        self._pending = 0
        self._closed = False
        self._error = None
        self._item_ids = itertools.count()
        self._issued = 0
        # item id -> "queued" | "running"; finished items are dropped
        self._states = {}
        # item labels in the order the worker started them
        self.start_log = []
        with _registry_lock:
            _registry[self.queue_id] = self
        self._worker = threading.Thread(target=self._run, name=self.name, daemon=True)
        self._worker.start()

    @property
    def handle(self) -> bytes:
        return self.queue_id.to_bytes(HANDLE_BYTES, "little")

    def state(self, item_id) -> str:
        if not 0 <= item_id < self._issued:
            raise KeyError(item_id)
        return self._states.get(item_id, DONE)

    @property
    def pending(self) -> int:
        return self._pending

    def submit(self, fn, label=None):
        """Append ``fn`` to the queue and return at once."""
        with self._cv:
            if self._closed:
                raise StreamixError(ErrorCode.INVALID_STREAM, f"{self.name} destroyed")
            item_id = next(self._item_ids)
            self._issued = item_id + 1
            self._items.append((item_id, item_id if label is None else label, fn))
            self._states[item_id] = QUEUED
            self._pending += 1
            self._cv.notify_all()
        return item_id

    def synchronize(self, timeout=None):
        """Block until every item submitted so far has finished."""
        with self._cv:
            if not self._cv.wait_for(lambda: self._pending == 0, timeout):
                raise TimeoutError(f"{self.name}: {self._pending} items still pending")
            error, self._error = self._error, None
        if error is not None:
            raise error

    def destroy(self):
        with self._cv:
            if self._pending:
                raise StreamixError(ErrorCode.QUEUE_BUSY, f"{self._pending} items pending")
            self._closed = True
            self._cv.notify_all()
        self._worker.join()
        with _registry_lock:
            _registry.pop(self.queue_id, None)

    def _run(self):
        while True:
            with self._cv:
                self._cv.wait_for(lambda: self._items or self._closed)
                if not self._items:
                    return
                item_id, label, fn = self._items.popleft()
                failed = self._error is not None
                self._states[item_id] = RUNNING
            self.start_log.append(label)
            # a failed item poisons the rest of the queue, like a device fault
            if not failed:
                try:
                    fn()
                except BaseException as exc:  # noqa: BLE001 - reported at synchronize
                    with self._cv:
                        self._error = exc
            with self._cv:
                del self._states[item_id]
                self._pending -= 1
                self._cv.notify_all()

    def __repr__(self):
        return f"<ExecQueue {self.queue_id} pending={self._pending}>"
