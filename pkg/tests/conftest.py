import os

import pytest
from hypothesis import HealthCheck, settings

import streamix as sx

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def code_of(excinfo):
    return excinfo.value.code


@pytest.fixture
def world2():
    return sx.World(2, sx.FabricConfig(1, 4))


def checksum(data) -> int:
    # plain Fletcher-16; independent of anything in the library
    a = b = 0
    for byte in bytes(data):
        a = (a + byte) % 255
        b = (b + a) % 255
    return (b << 8) | a


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line per acceptance criterion, then enforce it."""

    def verdict(number, title, ok, detail):
        line = f"[ACCEPTANCE] criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return verdict


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
