import re

import pytest

_CRITERIA: dict = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for the criterion named by the test (``test_criterion_NN_...``)."""
    number = int(re.search(r"criterion_(\d+)", request.node.name).group(1))

    def record(passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return passed

    yield record
    _CRITERIA.setdefault(number, (False, "did not complete"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
