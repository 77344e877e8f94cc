import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when == "teardown":
        return
    if call.when == "setup" and call.excinfo is None:
        return
    number, text = marker.args
    entry = _CRITERIA.setdefault(number, {"text": text, "outcomes": []})
    entry["outcomes"].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if all(entry["outcomes"]) else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {entry['text']}")


@pytest.fixture
def src():
    from gammagen.rng import seed_stream

    return seed_stream(20260101)
