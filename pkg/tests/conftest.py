import pytest


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="also run hour-scale checks marked 'extended'")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="extended tier; run with --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT, key=lambda k: int(k[1:])):
        terminalreporter.write_line(REPORT[key])
