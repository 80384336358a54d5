import os
import time

import hypothesis
import pytest

from cfdigits import sources

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PI_DIGITS = 1_000_000
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def pi_million():
    """The first 10^6 certified CF digits of pi and the seconds it took."""
    t0 = time.perf_counter()
    stream = sources.extract_digits(sources.PiSource(), PI_DIGITS)
    return stream, time.perf_counter() - t0


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; returns the verdict."""
    def record(cid, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pi_small():
    return sources.extract_digits(sources.PiSource(), 10_000)
