import pytest


def pytest_configure(config):
    config.acceptance_results = {}


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance_results", {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record(request):
    """Store and print one pass/fail line for an acceptance criterion."""

    def _record(n: int, ok: bool, detail: str):
        request.config.acceptance_results[n] = (ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record
