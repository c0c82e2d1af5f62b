import pytest

# criterion number -> list of (part, passed, detail)
_ACCEPTANCE: dict = {}


class _Recorder:
    def __init__(self, number: int, part: str):
        self.number, self.part = number, part

    def check(self, passed: bool, detail: str) -> None:
        """Record the outcome, then fail the test if it did not pass."""
        _ACCEPTANCE.setdefault(self.number, []).append((self.part, bool(passed), detail))
        assert passed, detail


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, part = marker.args
    return _Recorder(number, part)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, part): acceptance criterion check")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[number]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p} {'ok' if ok else 'FAILED'} ({d})" for p, ok, d in parts)
        tr.write_line(f"criterion {number}: {verdict} - {detail}")
