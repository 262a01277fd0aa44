import itertools
from functools import lru_cache

import pytest

from nsbox import gallery
from nsbox.box import Scenario

CHSH = Scenario((2, 2), (2, 2))
TRIPARTITE = Scenario((2, 2, 2), (2, 2, 2))


def all_strategies(s):
    per_party = [list(itertools.product(range(1, A + 1), repeat=X)) for A, X in zip(s.outputs, s.inputs)]
    return list(itertools.product(*per_party))


@lru_cache(maxsize=None)
def corpus():
    """(name, box) pairs shared by the reconstruction tests."""
    boxes = [("pr", gallery.pr_box()), ("tsirelson", gallery.tsirelson_box())]
    boxes += [("uniform", gallery.uniform_box(CHSH)), ("uniform3", gallery.uniform_box(TRIPARTITE))]
    boxes += [(f"det{f}", gallery.deterministic_box(CHSH, f)) for f in all_strategies(CHSH)]
    boxes += [(f"ns2-{i}", gallery.random_nonsignalling_box(CHSH, i)) for i in range(100)]
    boxes += [(f"ns3-{i}", gallery.random_nonsignalling_box(TRIPARTITE, i)) for i in range(25)]
    return tuple(boxes)


@pytest.fixture(scope="session")
def box_corpus():
    return corpus()


_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed or report.when == "call":
        previous = _acceptance.get(number, (title, True))[1]
        _acceptance[number] = (title, previous and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}")
