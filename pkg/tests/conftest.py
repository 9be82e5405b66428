import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    title = (item.obj.__doc__ or item.name).strip().splitlines()[0]
    # parametrised cases of one criterion share a title and fold into one line
    if rep.when == "call" or rep.failed:
        prev = _ACCEPTANCE.get(title, "PASS")
        _ACCEPTANCE[title] = "FAIL" if rep.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title, status in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{status}  {title}")
