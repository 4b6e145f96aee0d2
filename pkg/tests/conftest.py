import pytest

_ACCEPTANCE = []


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def record(self, number, title, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}  [{detail}]"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(line)
