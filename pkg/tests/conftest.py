import json
import sys
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(FIXTURES))

import make_fixtures  # noqa: E402


@pytest.fixture
def example8():
    """Printed 8-antenna instance: A, H, and the printed W blocks and X."""
    return {
        "A": make_fixtures.A8.astype(complex),
        "H": make_fixtures.H8.astype(complex),
        "X": make_fixtures.X8.astype(complex),
        "W_blocks": [np.array(b, dtype=complex) for b in make_fixtures.W_BLOCKS],
    }


@pytest.fixture
def a100():
    return make_fixtures.sparse_a100()


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
