import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth():
    from netanomaly.dataset import synth_generate

    return synth_generate(1600, 400, m=6, separation=4.0, seed=3)


# --- acceptance verdicts -----------------------------------------------------

_VERDICTS: dict[int, str] = {}


class _Verdict:
    """Context manager recording one acceptance criterion as PASS or FAIL."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, pytest.skip.Exception):
            status = "SKIP"
        else:
            status = "FAIL" if exc_type is not None else "PASS"
        line = f"criterion {self.number:2d} {status}: {self.title}"
        if self.detail:
            line += f" ({self.detail})"
        if exc_type is not None and status == "FAIL":
            line += f" [{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}]"
        _VERDICTS[self.number] = line
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Verdict


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
