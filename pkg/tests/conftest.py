import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.TITLES):
        if number not in acceptance.RESULTS:
            terminalreporter.write_line(f"criterion {number:>2}: NOT RUN  {acceptance.TITLES[number]}")
            continue
        ok, detail = acceptance.RESULTS[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {acceptance.TITLES[number]} | {detail}")
