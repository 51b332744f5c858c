"""Conjunctive queries: parsing, shape analysis, and label templates."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx

from .triplestore import ParseError, clean_token


class QueryError(ParseError):
    pass


class EmptyQueryError(QueryError):
    pass


class DisconnectedQueryError(QueryError):
    pass


class DuplicateEdgeError(QueryError):
    pass


class ConstantEdgeError(QueryError):
    pass


def is_var(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True)
class QueryEdge:
    src: str
    label: str
    dst: str
    idx: int

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(t for t in (self.src, self.dst) if is_var(t)))

    def other(self, var: str) -> str:
        return self.dst if var == self.src else self.src

    def __str__(self) -> str:
        return f"{self.src} {self.label} {self.dst}"


@dataclass(frozen=True)
class ConjunctiveQuery:
    edges: tuple[QueryEdge, ...]

    @property
    def vars(self) -> list[str]:
        """Variables in first-appearance order."""
        seen: dict[str, None] = {}
        for e in self.edges:
            for v in e.vars:
                seen.setdefault(v)
        return list(seen)

    def incident(self, var: str) -> list[QueryEdge]:
        return [e for e in self.edges if var in e.vars]

    def __len__(self) -> int:
        return len(self.edges)

    def __str__(self) -> str:
        return format_query(self)


@dataclass
class QueryShape:
    acyclic: bool
    cycles: list[list[str]] = field(default_factory=list)
    # Groups of query edges joining the same unordered variable pair.
    parallel: list[list[QueryEdge]] = field(default_factory=list)


def build_query(
    triples: Iterable[tuple[str, str, str]], linenos: Optional[Sequence[int]] = None
) -> ConjunctiveQuery:
    edges = []
    seen = set()
    for idx, (s, p, o) in enumerate(triples):
        lineno = linenos[idx] if linenos else None
        if not is_var(s) and not is_var(o):
            raise ConstantEdgeError(f"edge {s} {p} {o} has no variable", lineno)
        if (s, p, o) in seen:
            raise DuplicateEdgeError(f"duplicate edge {s} {p} {o}", lineno)
        seen.add((s, p, o))
        edges.append(QueryEdge(s, p, o, idx))
    if not edges:
        raise EmptyQueryError("query has no edges")
    q = ConjunctiveQuery(tuple(edges))
    if not nx.is_connected(var_graph(q)):
        raise DisconnectedQueryError("query graph is not connected")
    return q


def parse_query(text: str) -> ConjunctiveQuery:
    """Parse one ``?x label ?y`` edge per line; ``#`` lines are comments."""
    triples = []
    linenos = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[-1] == ".":
            tokens.pop()
        if len(tokens) != 3:
            raise QueryError(f"expected 3 terms, got {len(tokens)}", lineno)
        triples.append(tuple(clean_token(t) for t in tokens))
        linenos.append(lineno)
    return build_query(triples, linenos)


def format_query(q: ConjunctiveQuery) -> str:
    return "".join(f"{e}\n" for e in q.edges)


def var_graph(q: ConjunctiveQuery) -> nx.Graph:
    """Undirected simple graph over variables; parallel edges and loops collapse."""
    g = nx.Graph()
    g.add_nodes_from(q.vars)
    for e in q.edges:
        if is_var(e.src) and is_var(e.dst) and e.src != e.dst:
            g.add_edge(e.src, e.dst)
    return g


def _order_cycle(g: nx.Graph, nodes: Sequence[str], rank: dict[str, int]) -> list[str]:
    members = set(nodes)
    start = min(members, key=rank.__getitem__)
    nbrs = sorted((n for n in g[start] if n in members), key=rank.__getitem__)
    cycle = [start, nbrs[0]]
    while len(cycle) < len(members):
        prev, cur = cycle[-2], cycle[-1]
        nxt = [n for n in g[cur] if n in members and n != prev]
        cycle.append(nxt[0])
    return cycle


def analyze_shape(q: ConjunctiveQuery) -> QueryShape:
    g = var_graph(q)
    rank = {v: i for i, v in enumerate(q.vars)}
    groups: dict[frozenset, list[QueryEdge]] = {}
    for e in q.edges:
        if is_var(e.src) and is_var(e.dst) and e.src != e.dst:
            groups.setdefault(frozenset((e.src, e.dst)), []).append(e)
    parallel = [grp for grp in groups.values() if len(grp) > 1]
    # Cycles of a minimum basis are chordless, so each induces a simple ring.
    basis = nx.minimum_cycle_basis(g)
    cycles = [_order_cycle(g, c, rank) for c in basis]
    cycles.sort(key=lambda c: (len(c), [rank[v] for v in c]))
    return QueryShape(acyclic=not cycles and not parallel, cycles=cycles, parallel=parallel)


PLACEHOLDER = re.compile(r"^L(\d+)$")


@dataclass(frozen=True)
class Template:
    """Fixed variable topology with label placeholders ``L1..Lk``."""

    name: str
    edges: tuple[tuple[str, int, str], ...]

    @classmethod
    def from_text(cls, name: str, text: str) -> "Template":
        edges = []
        for line in text.strip().splitlines():
            s, label, o = line.split()
            m = PLACEHOLDER.match(label)
            if not m:
                raise QueryError(f"template label {label!r} is not a placeholder")
            edges.append((s, int(m.group(1)), o))
        slots = sorted(k for _, k, _ in edges)
        if slots != list(range(1, len(edges) + 1)):
            raise QueryError("placeholders must be L1..Lk, each used once")
        return cls(name, tuple(edges))

    @property
    def arity(self) -> int:
        return len(self.edges)

    def adjacent_slots(self) -> list[tuple[int, int, str]]:
        """Pairs of placeholder slots (0-based) sharing a variable, with join type."""
        out = []
        for i, (s1, _, o1) in enumerate(self.edges):
            for j, (s2, _, o2) in enumerate(self.edges):
                if i >= j:
                    continue
                for r1, t1 in (("s", s1), ("o", o1)):
                    for r2, t2 in (("s", s2), ("o", o2)):
                        if is_var(t1) and t1 == t2:
                            out.append((i, j, r1 + r2))
        return out


def instantiate(tmpl: Template, labels: Sequence[str]) -> ConjunctiveQuery:
    if len(labels) != tmpl.arity:
        raise QueryError(f"template {tmpl.name} takes {tmpl.arity} labels, got {len(labels)}")
    return build_query((s, labels[k - 1], o) for s, k, o in tmpl.edges)


SNOWFLAKE9 = Template.from_text(
    "snowflake9",
    """
    ?p L1 ?a
    ?q L2 ?p
    ?p L3 ?m1
    ?p L4 ?b
    ?m1 L5 ?c
    ?q L6 ?m2
    ?q L7 ?m3
    ?m3 L8 ?d
    ?m3 L9 ?e
    """,
)

DIAMOND4 = Template.from_text(
    "diamond4",
    """
    ?a L1 ?b
    ?b L2 ?d
    ?a L3 ?c
    ?c L4 ?d
    """,
)

TEMPLATES = {t.name: t for t in (SNOWFLAKE9, DIAMOND4)}


def get_template(name: str) -> Template:
    try:
        return TEMPLATES[name]
    except KeyError:
        raise QueryError(f"unknown template {name!r}; known: {', '.join(TEMPLATES)}") from None


def edge_by_label(q: ConjunctiveQuery, label: str) -> Optional[QueryEdge]:
    return next((e for e in q.edges if e.label == label), None)
