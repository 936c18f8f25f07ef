import contextlib
import time

import pytest

_RESULTS: dict[int, tuple[str, float, str]] = {}


@pytest.fixture
def criterion():
    """Context manager recording PASS/FAIL for one acceptance criterion."""

    @contextlib.contextmanager
    def run(k: int):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as e:
            _RESULTS[k] = ("FAIL", time.perf_counter() - t0, f"{type(e).__name__}: {str(e)[:200]}")
            print(f"criterion {k}: FAIL")
            raise
        _RESULTS[k] = ("PASS", time.perf_counter() - t0, "")
        print(f"criterion {k}: PASS")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        verdict, secs, why = _RESULTS[k]
        line = f"criterion {k}: {verdict} ({secs:.1f}s)"
        if why:
            line += f" {why}"
        terminalreporter.write_line(line)
