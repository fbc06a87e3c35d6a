import pytest

from commrec import osvt

BACKENDS = ["python"] + (["cython"] if osvt.BACKEND == "cython" else [])


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def record(request):
    """Log one PASS/FAIL line for an acceptance criterion; shown in the terminal summary."""
    def _record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return _record


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
