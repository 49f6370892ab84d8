import json
from pathlib import Path

import pytest

from bforest.catalog import load_catalog
from bforest.domain import Query

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def tiny_catalog():
    return load_catalog(FIXTURES / "tiny.json")


@pytest.fixture(scope="session")
def tiny_catalog_path():
    return FIXTURES / "tiny.json"


def load_fixture_query(name: str) -> Query:
    doc = json.loads((FIXTURES / "queries" / f"{name}.json").read_text(encoding="utf-8"))
    return Query.from_doc(doc)


@pytest.fixture(scope="session", name="load_fixture_query")
def load_fixture_query_fixture():
    return load_fixture_query


@pytest.fixture(scope="session")
def fixture_queries():
    names = sorted(p.stem for p in (FIXTURES / "queries").glob("*.json"))
    return [load_fixture_query(n) for n in names]
