import os

import numpy as np
import pytest
from hypothesis import settings

from sccode.kernels import backend_module

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _available_backends():
    names = ["python"]
    try:
        backend_module("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names


BACKENDS = _available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return backend_module(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL/SKIP line per acceptance criterion and return the flag."""

    def record(number, ok, detail):
        word = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{word} criterion {number:>2}: {detail}"
        _VERDICTS.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS, key=lambda t: t[0]):
            terminalreporter.write_line(line)
