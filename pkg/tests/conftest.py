import pytest

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per criterion, then assert on it."""
    lines = request.config.stash[_VERDICTS]

    def record(number: int, title: str, checks: dict[str, bool], detail: str = ""):
        ok = all(checks.values())
        failed = ", ".join(k for k, v in checks.items() if not v)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title}"
        if detail:
            line += f" [{detail}]"
        if failed:
            line += f" (failed: {failed})"
        lines.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
