"""Key/value hint objects, with binary values carried as lowercase hex."""

from .errors import ErrorCode, StreamixError

_HEX_DIGITS = frozenset("0123456789abcdef")


class Info:
    """Ordered string-to-string hint map."""

    def __init__(self, entries=None):
        self._entries = {}
        for key, value in (entries or {}).items():
            self.set(key, value)

    def set(self, key: str, value: str) -> None:
        if not key:
            raise ValueError("info key must be nonempty")
        if not (value.isascii() and (value == "" or value.isprintable())):
            raise ValueError(f"info value for {key!r} must be printable ASCII")
        self._entries[key] = value

    def get(self, key: str) -> str:
        try:
            return self._entries[key]
        except KeyError:
            raise StreamixError(ErrorCode.NOT_FOUND, key) from None

    def delete(self, key: str) -> None:
        self._entries.pop(key, None)

    def __contains__(self, key):
        return key in self._entries

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def __repr__(self):
        return f"Info({self._entries!r})"


def info_set_hex(info: Info, key: str, value) -> None:
    """Store ``value`` (any bytes-like object) under ``key`` as lowercase hex."""
    info.set(key, bytes(value).hex())


def info_get_hex(info: Info, key: str) -> bytes:
    text = info.get(key)
    if len(text) % 2 or not _HEX_DIGITS.issuperset(text):
        raise StreamixError(ErrorCode.BAD_ENCODING, f"{key}={text!r}")
    return bytes.fromhex(text)
