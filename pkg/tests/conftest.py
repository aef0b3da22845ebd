from importlib.resources import files

import pytest

from lexstate_lint.model import load_grammar

FIXTURES = ("two_states", "bibtex", "synthetic_large")


def fixture_path(name: str):
    return files("lexstate_lint").joinpath(f"fixtures/{name}.jj")


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def two_states():
    return load_grammar(fixture_text("two_states"))


@pytest.fixture(scope="session")
def bibtex():
    return load_grammar(fixture_text("bibtex"))


@pytest.fixture(scope="session")
def large():
    return load_grammar(fixture_text("synthetic_large"))


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
