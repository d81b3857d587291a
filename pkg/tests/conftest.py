import sys
from pathlib import Path

import pytest

from demosynth.dsl import Demonstration, load_program, load_trace
from demosynth.envmodel import load_env

DATA = Path(__file__).resolve().parents[1] / "src" / "demosynth" / "data"
SUITE = Path(__file__).resolve().parents[1] / "suite"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def e0():
    return load_env(DATA / "motivating_env.json")


@pytest.fixture(scope="session")
def demo_trace():
    return load_trace(DATA / "motivating_demo.trace")


@pytest.fixture(scope="session")
def demo(e0, demo_trace):
    return Demonstration(e0, demo_trace)


@pytest.fixture(scope="session")
def truth():
    return load_program(DATA / "motivating_truth.dsl")


@pytest.fixture(scope="session")
def single_loop():
    return load_program(DATA / "motivating_unrealizable.dsl")


# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
