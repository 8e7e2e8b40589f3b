from __future__ import annotations

import pytest

from subscore import synth

_acceptance_labels: dict[str, str] = {}
_config = None


def pytest_configure(config):
    global _config
    _config = config


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _acceptance_labels[item.nodeid] = marker.kwargs.get("criterion", item.name)


def pytest_runtest_logreport(report):
    label = _acceptance_labels.get(report.nodeid)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        verdict = "PASS" if report.passed else "FAIL"
        if report.skipped:
            verdict = "SKIP"
        terminal = _config.pluginmanager.get_plugin("terminalreporter") if _config else None
        if terminal is not None:
            terminal.ensure_newline()
            terminal.write_line(f"ACCEPTANCE {verdict}: {label}")


@pytest.fixture(scope="session")
def tree():
    return synth.demo_tree()


@pytest.fixture(scope="session")
def corpus(tree):
    return synth.synth_corpus(tree)
