from pathlib import Path

import pytest

from simplelogic.textcodec import parse_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def reference_blocks():
    """The four worked examples, parsed (labels and depths recomputed)."""
    return parse_corpus((DATA / "reference_examples.txt").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def reference_text():
    return (DATA / "reference_examples.txt").read_text(encoding="utf-8")


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
