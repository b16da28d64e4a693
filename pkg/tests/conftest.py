import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qtdlab.info import fit_pair_rate  # noqa: E402
from qtdlab.noise import ExperimentParams  # noqa: E402


@pytest.fixture(scope="session")
def fitted_params():
    """Default parameters with the pair rate fitted to a crossover at g = 40."""
    base = ExperimentParams(pair_rate=1.0)
    return base.updated(pair_rate=fit_pair_rate(base, 40.0))


ACCEPTANCE_LINES: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion():
    """Record a verdict for an acceptance criterion and fail the test if it is negative."""

    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.setdefault(number, []).append((bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        checks = ACCEPTANCE_LINES[number]
        ok = all(v for v, _ in checks)
        detail = "; ".join(d for _, d in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}")
