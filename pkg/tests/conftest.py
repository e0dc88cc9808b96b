import contextlib
import os
import sys
import time

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def settlement():
    from synthdrive.procgen import SceneSpec, generate_scene
    return generate_scene(SceneSpec("settlement_complex", 5))


@pytest.fixture(scope="session")
def lowland():
    from synthdrive.procgen import SceneSpec, generate_scene
    return generate_scene(SceneSpec("mountain_lowland", 5))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager factory recording one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    @contextlib.contextmanager
    def record(number, title):
        start = time.perf_counter()
        detail = {}
        try:
            yield detail
        except BaseException:
            lines.append((number, "FAIL", title, time.perf_counter() - start, detail))
            print(f"criterion {number}: FAIL {title}")
            raise
        lines.append((number, "PASS", title, time.perf_counter() - start, detail))
        print(f"criterion {number}: PASS {title}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, seconds, detail in sorted(lines):
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        terminalreporter.write_line(f"[{status}] {number:>2}. {title} ({seconds:.1f} s{'; ' + extra if extra else ''})")
