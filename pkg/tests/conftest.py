from pathlib import Path

import pytest

from craftflow import parse_cwn

FIXTURES = Path(__file__).parent / "fixtures"

FIXTURE_NAMES = ("spoon", "crane", "sketch", "knitting-base", "knitting-executed")


def load_fixture(name: str):
    return parse_cwn((FIXTURES / f"{name}.cwn").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def spoon():
    return load_fixture("spoon")


@pytest.fixture(scope="session")
def crane():
    return load_fixture("crane")


@pytest.fixture(scope="session")
def sketch():
    return load_fixture("sketch")


@pytest.fixture(scope="session")
def knitting_pair():
    return load_fixture("knitting-base"), load_fixture("knitting-executed")


@pytest.fixture(scope="session")
def all_fixtures():
    return {name: load_fixture(name) for name in FIXTURE_NAMES}
