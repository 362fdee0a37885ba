import os
import re

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """Record the outcome of one acceptance criterion and assert it.

    The criterion number is read from the test name (``test_criterion_NN_...``).
    A test that raises before calling the recorder is reported as failed.
    """
    number = int(re.search(r"criterion_(\d+)", request.node.name).group(1))
    store = request.config.stash[_VERDICTS]

    def record(title, checks, detail=""):
        failed = [name for name, ok in checks.items() if not ok]
        note = detail if not failed else f"{detail}; failed: {', '.join(failed)}"
        store[number] = (not failed, title, note)
        assert not failed, f"criterion {number} ({title}): {note}"

    yield record
    if number not in store:
        store[number] = (False, request.node.name, "raised before reaching a verdict")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, title, note = store[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} [{note}]")
