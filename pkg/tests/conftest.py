"""Shared fixtures: each planted sequence is synthesized and analysed once per session."""
import numpy as np
import pytest

from necklab import scenarios
from necklab.verify import neck_bump, run_sequence

_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary lists them all."""
    def record(number: int, ok: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def single_run():
    sc = scenarios.single()
    return sc, run_sequence(sc, headline=True)


@pytest.fixture(scope="session")
def concentric_run():
    sc = scenarios.concentric()
    return sc, run_sequence(sc)


@pytest.fixture(scope="session")
def separated_run():
    sc = scenarios.separated()
    return sc, run_sequence(sc)


@pytest.fixture(scope="session")
def bumped_run():
    sc = scenarios.single()
    return sc, run_sequence(sc, perturb=neck_bump())
