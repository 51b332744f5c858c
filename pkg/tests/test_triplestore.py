import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from answergraph.triplestore import PERMUTATIONS, ParseError, TripleStore, load_ntriples


def test_two_lines():
    store = load_ntriples("w1 A x1 .\nx1 B y1 .")
    # w1, x1, y1
    assert store.stats() == {"triples": 2, "nodes": 3, "predicates": 2}


def test_duplicates_collapse():
    store = load_ntriples("w1 A x1\nw1 A x1\n")
    assert len(store) == 1


def test_chain_fixture_counts(chain_store):
    assert chain_store.stats() == {"triples": 8, "nodes": 9, "predicates": 3}


def test_empty_input():
    store = load_ntriples(b"")
    assert len(store) == 0
    assert list(store.scan()) == []


def test_bytes_and_angle_brackets():
    store = load_ntriples(io.BytesIO(b"<http://x/a> <http://x/p> <http://x/b> .\n# note\n\n"))
    assert store.decode(next(iter(store.triples))) == ("http://x/a", "http://x/p", "http://x/b")


def test_dictionary_first_seen_order():
    store = load_ntriples("b P a\na Q c\n")
    assert list(store.nodes) == ["b", "a", "c"]
    assert list(store.predicates) == ["P", "Q"]


@pytest.mark.parametrize("line", ["a b", "a b c d e", "a b c d ."])
def test_malformed_line_reports_lineno(line):
    with pytest.raises(ParseError) as err:
        load_ntriples(f"x p y .\n{line}\n")
    assert err.value.lineno == 2


def test_scan_examples(chain_store):
    n, p = chain_store.nodes.encode, chain_store.predicates.encode
    assert len(list(chain_store.scan(p=p("A")))) == 3
    assert len(list(chain_store.scan(s=n("x1"), p=p("B")))) == 1
    assert list(chain_store.scan(s=n("z1"), p=p("A"))) == []


def test_scan_unknown_id_is_empty(chain_store):
    assert list(chain_store.scan(s=10_000)) == []


def test_snapshot_round_trip(chain_store):
    buf = io.StringIO()
    chain_store.dump_snapshot(buf)
    buf.seek(0)
    again = TripleStore.load_snapshot(buf)
    assert again.triples == chain_store.triples
    assert list(again.nodes) == list(chain_store.nodes)
    assert json.loads(chain_store.stats_json()) == chain_store.stats()


def _random_store(seed, n_triples):
    rng = random.Random(seed)
    lines = [
        (f"n{rng.randrange(30)}", f"p{rng.randrange(4)}", f"n{rng.randrange(30)}")
        for _ in range(n_triples)
    ]
    return TripleStore.from_terms(lines)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    size=st.integers(0, 1000),
    mask=st.tuples(st.booleans(), st.booleans(), st.booleans()),
)
def test_scan_matches_filter(seed, size, mask):
    store = _random_store(seed, size)
    rng = random.Random(seed + 1)
    probe = rng.choice(sorted(store.triples)) if store.triples else (0, 0, 0)
    pattern = tuple(v if b else None for v, b in zip(probe, mask))
    expected = {t for t in store.triples if all(q is None or q == v for q, v in zip(pattern, t))}
    got = list(store.scan(*pattern))
    assert len(got) == len(set(got))
    assert set(got) == expected
    for index in PERMUTATIONS:
        assert set(store.scan(*pattern, index=index)) == expected


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_indexes_agree_and_dictionary_round_trips(seed):
    store = _random_store(seed, 300)
    for name, perm in PERMUTATIONS.items():
        restored = {tuple(key[perm.index(i)] for i in range(3)) for key in store.indexes[name]}
        assert restored == set(store.triples)
    for term in store.nodes:
        assert store.nodes.decode(store.nodes.encode(term)) == term
