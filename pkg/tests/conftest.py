import numpy as np
import pytest

from crossorder.core import ElementSet, Modality, StoryPair

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_record():
    def record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_story(m=3, n=3, d=4, sim=True, sid="st"):
    r = np.random.default_rng(m * 100 + n * 10 + d)
    text = ElementSet(r.normal(size=(m, d)), list(range(m)), Modality.TEXT)
    image = ElementSet(r.normal(size=(n, d)), list(range(n)), Modality.IMAGE)
    return StoryPair(sid, text, image, r.uniform(size=(m, n)) if sim else None)
