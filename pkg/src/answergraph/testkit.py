"""Independent oracles, seeded random instances and the template query miner."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from typing import Iterator, Optional

from .catalog import Catalog
from .engine import count_embeddings, generate_answer_graph
from .planner import plan_edgifier
from .query import ConjunctiveQuery, QueryEdge, Template, build_query, instantiate, is_var
from .triplestore import TripleStore


def oracle_search(q: ConjunctiveQuery, store: TripleStore) -> Iterator[tuple[int, ...]]:
    """Nested-loop search over the data graph in parse order.

    Shares nothing with the answer-graph path: no candidate sets, no
    burnback, no planning. Each embedding is yielded once.
    """
    vars_ = q.vars

    def resolve(term: str, env: dict) -> Optional[int]:
        if is_var(term):
            return env.get(term)
        nid = store.nodes.encode(term)
        return -1 if nid is None else nid

    def search(i: int, env: dict) -> Iterator[tuple[int, ...]]:
        if i == len(q.edges):
            yield tuple(env[v] for v in vars_)
            return
        e = q.edges[i]
        pid = store.predicates.encode(e.label)
        if pid is None:
            return
        for s, _, o in store.scan(resolve(e.src, env), pid, resolve(e.dst, env)):
            new = dict(env)
            if is_var(e.src):
                new[e.src] = s
            if is_var(e.dst):
                if e.dst in new and new[e.dst] != o:
                    continue
                new[e.dst] = o
            yield from search(i + 1, new)

    return search(0, {})


def oracle_evaluate(q: ConjunctiveQuery, store: TripleStore) -> set[tuple[int, ...]]:
    """Exact embedding set, as tuples ordered like ``q.vars``."""
    return set(oracle_search(q, store))


def oracle_nonempty(q: ConjunctiveQuery, store: TripleStore) -> bool:
    return next(oracle_search(q, store), None) is not None


def embedding_edges(q: ConjunctiveQuery, store: TripleStore, embeddings) -> dict[QueryEdge, set[tuple[int, int]]]:
    """Project embeddings onto every query edge."""
    pos = {v: i for i, v in enumerate(q.vars)}
    proj: dict[QueryEdge, set[tuple[int, int]]] = {e: set() for e in q.edges}

    def val(term: str, emb) -> int:
        return emb[pos[term]] if is_var(term) else store.nodes.encode(term)

    for emb in embeddings:
        for e in q.edges:
            proj[e].add((val(e.src, emb), val(e.dst, emb)))
    return proj


def oracle_ideal_ag(q: ConjunctiveQuery, store: TripleStore) -> dict[QueryEdge, set[tuple[int, int]]]:
    return embedding_edges(q, store, oracle_evaluate(q, store))


# ---------------------------------------------------------------------------
# Random instances


@dataclass
class StoreParams:
    nodes: int = 60
    predicates: int = 4
    edges: int = 300
    # Zipf-like exponent for endpoint choice; 0 is uniform.
    skew: float = 0.0


def random_store(rng: random.Random, params: StoreParams) -> TripleStore:
    if params.nodes < 1 or params.predicates < 1 or params.edges < 0:
        raise ValueError("store parameters must be positive")
    capacity = params.nodes * params.nodes * params.predicates
    if params.edges > capacity:
        raise ValueError(f"cannot place {params.edges} distinct edges (capacity {capacity})")
    weights = [1.0 / (i + 1) ** params.skew for i in range(params.nodes)]
    nodes = [f"n{i}" for i in range(params.nodes)]
    preds = [f"P{i}" for i in range(params.predicates)]
    seen: set[tuple[str, str, str]] = set()
    ordered = []
    while len(ordered) < params.edges:
        s, o = rng.choices(nodes, weights, k=2)
        t = (s, rng.choice(preds), o)
        if t not in seen:
            seen.add(t)
            ordered.append(t)
    return TripleStore.from_terms(ordered)


def random_tree_query(rng: random.Random, preds: list[str], n_edges: int) -> ConjunctiveQuery:
    """Random tree-shaped query, edges listed in a connected order."""
    if n_edges < 1:
        raise ValueError("query needs at least one edge")
    vars_ = ["?v0"]
    triples = []
    for i in range(1, n_edges + 1):
        anchor = rng.choice(vars_)
        new = f"?v{i}"
        vars_.append(new)
        s, o = (anchor, new) if rng.random() < 0.5 else (new, anchor)
        triples.append((s, rng.choice(preds), o))
    return build_query(triples)


def random_cycle_query(rng: random.Random, preds: list[str], length: int) -> ConjunctiveQuery:
    """A single cycle of the given length with random edge directions.

    Length 4 uses the diamond layout (two 2-paths between ?a and ?d).
    """
    if length < 3:
        raise ValueError("cycle length must be at least 3")
    if length == 4:
        pairs = [("?a", "?b"), ("?b", "?d"), ("?a", "?c"), ("?c", "?d")]
    else:
        ring = [f"?c{i}" for i in range(length)]
        pairs = [(ring[i], ring[(i + 1) % length]) for i in range(length)]
    triples = []
    for a, b in pairs:
        s, o = (a, b) if rng.random() < 0.7 else (b, a)
        triples.append((s, rng.choice(preds), o))
    return build_query(triples)


def random_instance(
    seed: int,
    store_params: Optional[StoreParams] = None,
    query_edges: int = 3,
    cyclic: bool = False,
) -> tuple[TripleStore, ConjunctiveQuery]:
    """Seeded (store, query) pair; with ``cyclic`` the query is one cycle of
    ``query_edges`` edges (4 gives the diamond)."""
    rng = random.Random(seed)
    store = random_store(rng, store_params or StoreParams())
    preds = sorted(store.predicates)
    if not preds:
        raise ValueError("store has no predicates to label the query with")
    if cyclic:
        q = random_cycle_query(rng, preds, query_edges)
    else:
        q = random_tree_query(rng, preds, query_edges)
    return store, q


CYCLE_KINDS = {3: "triangle", 4: "diamond", 5: "pentagon"}


def suite_params(seed: int) -> StoreParams:
    rng = random.Random(10_000 + seed)
    return StoreParams(
        nodes=rng.randint(50, 200),
        predicates=rng.randint(2, 6),
        edges=rng.randint(100, 500),
        skew=rng.choice([0.0, 0.4, 0.8]),
    )


def instance_suite(n_acyclic: int, n_cyclic: int) -> Iterator[tuple[str, TripleStore, ConjunctiveQuery]]:
    """Mixed seeded suite: trees of 1..6 edges, then triangle/diamond/pentagon
    cycles in rotation. Yields (kind, store, query)."""
    for seed in range(n_acyclic):
        store, q = random_instance(seed, suite_params(seed), 1 + seed % 6)
        yield "tree", store, q
    for seed in range(n_cyclic):
        length = 3 + seed % 3
        store, q = random_instance(seed, suite_params(seed), length, cyclic=True)
        yield CYCLE_KINDS[length], store, q


# ---------------------------------------------------------------------------
# Query miner


@dataclass
class MinedQuery:
    template: str
    labels: list[str]
    embeddings: int
    ag_total: int

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(
            {"template": d["template"], "labels": d["labels"], "embeddings": d["embeddings"], "agTotal": d["ag_total"]}
        )


def candidate_assignments(tmpl: Template, cat: Catalog, prune: bool = True) -> Iterator[list[str]]:
    """Depth-first label assignments, most frequent labels first.

    With ``prune``, a branch is cut as soon as two adjacent slots have no
    2-gram key for their shared-variable join.
    """
    labels = sorted(cat.onegrams, key=lambda p: (-cat.onegrams[p].count, p))
    labels = [p for p in labels if cat.onegrams[p].count > 0]
    # slot -> [(earlier slot, join type seen from the earlier slot)]
    checks: dict[int, list[tuple[int, str]]] = {i: [] for i in range(tmpl.arity)}
    for i, j, jt in tmpl.adjacent_slots():
        checks[j].append((i, jt))
    chosen: list[str] = []

    def dfs(slot: int) -> Iterator[list[str]]:
        if slot == tmpl.arity:
            yield list(chosen)
            return
        for p in labels:
            if prune and any(cat.key_count(chosen[i], p, jt) == 0 for i, jt in checks[slot]):
                continue
            chosen.append(p)
            yield from dfs(slot + 1)
            chosen.pop()

    yield from dfs(0)


def mine_queries(
    tmpl: Template, store: TripleStore, cat: Catalog, limit: int, prune: bool = True
) -> list[MinedQuery]:
    out: list[MinedQuery] = []
    if limit <= 0:
        return out
    for labels in candidate_assignments(tmpl, cat, prune):
        q = instantiate(tmpl, labels)
        ag = generate_answer_graph(q, plan_edgifier(q, cat), None, store)
        if not ag.total:
            continue
        n = count_embeddings(q, ag)
        if n:
            out.append(MinedQuery(tmpl.name, labels, n, ag.total))
            if len(out) >= limit:
                break
    return out
