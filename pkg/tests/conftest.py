import pytest

from streamclip import Element
from streamclip.harness.io import gen_stream

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def small_instance(seed: int) -> list[Element]:
    """n=8 feature-based instance used by every exhaustive check."""
    return gen_stream(8, 6, 0.4, 1.0, seed)


@pytest.fixture
def fixture4():
    return [
        Element("e1", {"u1": 4.0}),
        Element("e2", {"u1": 5.0}),
        Element("e3", {"u2": 1.0}),
        Element("e4", {"u3": 0.16}),
    ]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
