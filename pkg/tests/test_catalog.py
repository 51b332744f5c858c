import io
import itertools
import random

import pytest

from answergraph.catalog import (
    BOUND_BOTH,
    BOUND_NONE,
    BOUND_OBJECT,
    BOUND_SUBJECT,
    JOIN_TYPES,
    Catalog,
    OneGram,
    TwoGram,
    build_catalog,
    estimate_pattern_cardinality,
    load_catalog,
    save_catalog,
)
from answergraph.triplestore import ParseError, TripleStore, load_ntriples


def brute_catalog(store):
    """Recount every statistic by looping over triples and triple pairs."""
    dec = store.predicates.decode
    ones = {}
    for pid in range(len(store.predicates)):
        ts = [t for t in store.triples if t.p == pid]
        ones[dec(pid)] = OneGram(len(ts), len({t.s for t in ts}), len({t.o for t in ts}))
    twos = {}
    pick = {"s": lambda t: t.s, "o": lambda t: t.o}
    for t1, t2 in itertools.product(store.triples, repeat=2):
        for jt in JOIN_TYPES:
            k1, k2 = pick[jt[0]](t1), pick[jt[1]](t2)
            if k1 == k2:
                key = (dec(t1.p), dec(t2.p), jt)
                pairs, keys = twos.get(key, (0, set()))
                keys.add(k1)
                twos[key] = (pairs + 1, keys)
    return ones, {k: TwoGram(p, len(ks)) for k, (p, ks) in twos.items()}


def test_chain_onegrams(chain_catalog):
    assert chain_catalog.onegrams["A"] == OneGram(3, 3, 1)
    assert chain_catalog.onegrams["B"] == OneGram(1, 1, 1)
    assert chain_catalog.onegrams["C"] == OneGram(4, 1, 4)
    assert chain_catalog.total_triples == 8


def test_chain_twogram(chain_catalog):
    assert chain_catalog.twograms["A", "B", "os"] == TwoGram(3, 1)
    assert chain_catalog.twograms["B", "A", "so"] == TwoGram(3, 1)
    assert ("A", "C", "os") not in chain_catalog.twograms


def test_empty_store():
    cat = build_catalog(load_ntriples(""))
    assert cat.onegrams == {} and cat.twograms == {} and cat.total_triples == 0


@pytest.mark.parametrize("seed", range(6))
def test_exact_against_brute_force(seed):
    rng = random.Random(seed)
    n = rng.randrange(1, 120)
    store = TripleStore.from_terms(
        (f"n{rng.randrange(15)}", f"p{rng.randrange(4)}", f"n{rng.randrange(15)}") for _ in range(n)
    )
    cat = build_catalog(store)
    ones, twos = brute_catalog(store)
    assert cat.onegrams == ones
    assert cat.twograms == twos
    assert sum(g.count for g in cat.onegrams.values()) == cat.total_triples
    for (p1, p2, jt), g in cat.twograms.items():
        mirror = cat.twograms[p2, p1, jt[::-1]]
        assert mirror.pairs == g.pairs
        r1, r2 = jt
        assert g.keys <= min(cat.distinct(p1, r1), cat.distinct(p2, r2))


def test_exact_on_larger_store():
    rng = random.Random(42)
    store = TripleStore.from_terms(
        (f"n{rng.randrange(80)}", f"p{rng.randrange(5)}", f"n{rng.randrange(80)}") for _ in range(1000)
    )
    cat = build_catalog(store)
    # Spot-check one 2-gram per join type by direct recount.
    for jt in JOIN_TYPES:
        p1, p2 = "p0", "p1"
        left = [t for t in store.triples if store.predicates.decode(t.p) == p1]
        right = [t for t in store.triples if store.predicates.decode(t.p) == p2]
        pick = {"s": lambda t: t.s, "o": lambda t: t.o}
        pairs = sum(1 for a in left for b in right if pick[jt[0]](a) == pick[jt[1]](b))
        assert cat.pair_count(p1, p2, jt) == pairs


def test_estimates(chain_catalog):
    assert estimate_pattern_cardinality(chain_catalog, "A", BOUND_NONE) == 3
    assert estimate_pattern_cardinality(chain_catalog, "B", BOUND_SUBJECT, 1) == 1
    assert estimate_pattern_cardinality(chain_catalog, "C", BOUND_SUBJECT, 1) == 4
    assert estimate_pattern_cardinality(chain_catalog, "A", BOUND_OBJECT, 1) == 3
    assert estimate_pattern_cardinality(chain_catalog, "A", BOUND_BOTH, 3) == 3 * 3 / (3 * 1)
    assert estimate_pattern_cardinality(chain_catalog, "nope", BOUND_SUBJECT, 5) == 0
    assert estimate_pattern_cardinality(chain_catalog, "A", BOUND_SUBJECT, -4) == 0


def test_estimate_sanity_on_uniform_store():
    # Every subject of p has exactly 3 objects.
    lines = [(f"s{i}", "p", f"o{(i + k) % 20}") for i in range(20) for k in range(3)]
    store = TripleStore.from_terms(lines)
    cat = build_catalog(store)
    g = cat.onegrams["p"]
    bound = {store.nodes.encode(f"s{i}") for i in range(7)}
    true = sum(1 for t in store.triples if t.s in bound)
    est = estimate_pattern_cardinality(cat, "p", BOUND_SUBJECT, len(bound))
    factor = max(g.dsubj, g.dobj)
    assert true / factor <= est <= true * factor
    assert est == true


def test_round_trip(chain_catalog):
    text = save_catalog(chain_catalog)
    assert load_catalog(text) == chain_catalog
    buf = io.StringIO()
    save_catalog(chain_catalog, buf)
    assert buf.getvalue() == text
    assert "1G\tA\t3\t3\t1" in text.splitlines()


def test_empty_catalog_is_header_only():
    lines = save_catalog(Catalog()).splitlines()
    assert lines and all(line.startswith("#") for line in lines)
    assert load_catalog("\n".join(lines)) == Catalog()


@pytest.mark.parametrize(
    "bad",
    [
        "1G\tA\t-3\t1\t1",
        "1G\tA\t3\t1",
        "2G\tA\tB\txx\t1\t1",
        "2G\tA\tB\tss\t0\t2",
        "3G\tA",
        "1G\tA\tthree\t1\t1",
    ],
)
def test_malformed_catalog(bad):
    with pytest.raises(ParseError) as err:
        load_catalog(f"#catalog\tv1\n1G\tZ\t1\t1\t1\n{bad}\n")
    assert err.value.lineno == 3
