import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def ring(size: int, top: int, left: int, side: int) -> np.ndarray:
    """Square one-pixel outline on a blank ``size``x``size`` grid."""
    grid = np.zeros((size, size), dtype=bool)
    grid[top, left:left + side] = grid[top + side - 1, left:left + side] = True
    grid[top:top + side, left] = grid[top:top + side, left + side - 1] = True
    return grid


@pytest.fixture
def ring_fixture():
    return ring


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def emit(label, passed, detail):
        status = "INFO" if passed is None else ("PASS" if passed else "FAIL")
        line = f"{label}: {status}  {detail}"
        lines.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
