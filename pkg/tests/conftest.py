import numpy as np
import pytest

from jndsqf.data import JndPoint


def mixture_points(seed, n=400, means=(30, 60), sd=3.0):
    """Integer QF samples from an equal-weight Gaussian mixture."""
    rng = np.random.default_rng(seed)
    comp = rng.integers(0, len(means), n)
    x = np.asarray(means, dtype=float)[comp] + sd * rng.standard_normal(n)
    q = np.clip(np.rint(x), 1, 100).astype(int)
    return [JndPoint(int(v)) for v in q]


@pytest.fixture
def two_cluster_points():
    return mixture_points(0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py::test_criterion_" in rep.nodeid and rep.when in ("call", "setup"):
                name = rep.nodeid.split("::")[-1][len("test_"):]
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines, key=lambda t: int(t[0].split("_")[1])):
            terminalreporter.write_line(f"{status:8s} {name}")
