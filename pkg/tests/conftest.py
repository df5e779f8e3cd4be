import numpy as np
import pytest

from dissreg.operators import OperatorSpec, companion_system, reduced_coefficients, system_from_roots


@pytest.fixture
def fo5_operator():
    spec = OperatorSpec(1, (0.999, 1.0), 1.0, 0, -3.0)
    return spec, companion_system(reduced_coefficients(spec))


@pytest.fixture
def toy_h1():
    """roots {-1, -2}, lambda = 1"""
    return OperatorSpec.leading_only(1, 3.0, 1.0), system_from_roots([-1.0, -2.0], 1)


@pytest.fixture
def toy_h2():
    roots = [-0.5, -1.0, -1.5 + 0.7j, -1.5 - 0.7j]
    return OperatorSpec.leading_only(2, 2.25, -2.0), system_from_roots(roots, 2)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line per acceptance criterion and echo it immediately."""

    def report(tag, ok, detail, elapsed=None):
        timing = "" if elapsed is None else f" [{elapsed:.2f}s]"
        line = f"{'PASS' if ok else 'FAIL'} criterion {tag}: {detail}{timing}"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
