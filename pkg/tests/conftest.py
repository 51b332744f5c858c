from pathlib import Path

import pytest

from answergraph import build_catalog, load_ntriples, parse_query

DATA = Path(__file__).resolve().parent.parent / "data"

G_CHAIN = (DATA / "g_chain.nt").read_text()
G_SPURIOUS = (DATA / "g_spurious.nt").read_text()
CHAIN = (DATA / "chain.rq").read_text()
DIAMOND = (DATA / "diamond.rq").read_text()
TRIANGLE = "?a P ?b\n?b Q ?c\n?a R ?c\n"


@pytest.fixture
def chain_store():
    return load_ntriples(G_CHAIN)


@pytest.fixture
def chain_catalog(chain_store):
    return build_catalog(chain_store)


@pytest.fixture
def spurious_store():
    return load_ntriples(G_SPURIOUS)


@pytest.fixture
def chain_query():
    return parse_query(CHAIN)


@pytest.fixture
def diamond_query():
    return parse_query(DIAMOND)
