import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from streamix import ErrorCode, Info, StreamixError, info_get_hex, info_set_hex


def test_set_hex_dead():
    info = Info()
    info_set_hex(info, "value", bytes([0xDE, 0xAD]))
    assert info.get("value") == "dead"


def test_set_hex_empty():
    info = Info()
    info_set_hex(info, "value", b"")
    assert info.get("value") == ""
    assert info_get_hex(info, "value") == b""


def test_get_hex_dead():
    info = Info({"value": "dead"})
    assert info_get_hex(info, "value") == bytes([0xDE, 0xAD])


def test_set_hex_overwrites():
    info = Info()
    info_set_hex(info, "k", b"\x01")
    info_set_hex(info, "k", b"\xff\x00")
    assert info.get("k") == "ff00"
    assert len(info) == 1


def test_absent_key_not_found():
    with pytest.raises(StreamixError) as exc:
        info_get_hex(Info(), "missing")
    assert exc.value.code is ErrorCode.NOT_FOUND


@pytest.mark.parametrize("bad", ["xyz", "abc", "DEAD", "de ad", "0x12"])
def test_malformed_hex_bad_encoding(bad):
    info = Info()
    info.set("value", bad)
    with pytest.raises(StreamixError) as exc:
        info_get_hex(info, "value")
    assert exc.value.code is ErrorCode.BAD_ENCODING


def test_roundtrip_1000_random_16_byte_values():
    rng = np.random.default_rng(1234)
    info = Info()
    for _ in range(1000):
        value = rng.integers(0, 256, 16, dtype=np.uint8).tobytes()
        info_set_hex(info, "value", value)
        assert info_get_hex(info, "value") == value


@given(st.binary(max_size=256))
def test_hex_roundtrip_property(value):
    info = Info()
    info_set_hex(info, "v", value)
    encoded = info.get("v")
    assert len(encoded) == 2 * len(value)
    assert set(encoded) <= set("0123456789abcdef")
    # independent reference encoding: high nibble first, lowercase
    assert encoded == "".join("%02x" % b for b in value)
    assert info_get_hex(info, "v") == value


def test_plain_set_rejects_non_printable():
    with pytest.raises(ValueError):
        Info().set("k", "tab\there")


def test_entries_keep_insertion_order():
    info = Info()
    for k in ("type", "value", "endpoint_policy"):
        info.set(k, "x")
    assert list(info) == ["type", "value", "endpoint_policy"]
    info.delete("value")
    assert "value" not in info
