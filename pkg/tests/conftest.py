import functools

ACCEPTANCE_RESULTS = {}


def criterion(number, title):
    """Record the pass/fail outcome of an acceptance test for the summary table."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            ACCEPTANCE_RESULTS[number] = (title, "FAIL")
            fn(*args, **kwargs)
            ACCEPTANCE_RESULTS[number] = (title, "PASS")

        return run

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, status = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
