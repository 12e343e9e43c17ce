from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from wdw.dsl import parse_schema
from wdw.model import validate_schema

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "wdw" / "fixtures"
ANNEX = FIXTURES / "annex.wdl"


@pytest.fixture(scope="session")
def annex_text() -> str:
    return ANNEX.read_text(encoding="utf-8")


@pytest.fixture
def annex(annex_text):
    """A freshly parsed and resolved copy of the reference schema."""
    doc = parse_schema(annex_text)
    assert validate_schema(doc.schema) == []
    return doc


@pytest.fixture(scope="module")
def annex_shared(annex_text):
    """One parsed copy per module, for read-only use inside property tests."""
    return parse_schema(annex_text)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
