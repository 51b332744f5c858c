"""Cost-based planners.

``plan_edgifier`` picks the left-deep edge-extension order for answer-graph
generation, ``plan_triangulation`` chooses chords that cut every query cycle
down to triangles, and ``plan_defactorization`` orders the joins that turn an
answer graph back into embedding tuples.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Union

from .catalog import (
    BOUND_BOTH,
    BOUND_NONE,
    BOUND_OBJECT,
    BOUND_SUBJECT,
    Catalog,
    estimate_pattern_cardinality,
)
from .query import ConjunctiveQuery, QueryEdge, QueryShape, analyze_shape, is_var

if TYPE_CHECKING:
    from .engine import AnswerGraph


def role(e: QueryEdge, var: str) -> str:
    """'s' if ``var`` is the subject end of ``e``, else 'o'."""
    return "s" if e.src == var else "o"


# ---------------------------------------------------------------------------
# Edgifier


@dataclass
class EdgePlan:
    order: list[QueryEdge]
    est_cost: float
    # Per step: estimated edge walks and candidate-set sizes after the step.
    steps: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "order": [str(e) for e in self.order],
            "estCost": self.est_cost,
            "steps": self.steps,
            "warnings": self.warnings,
        }


class CostModel:
    """Edge-walk cost of extending a set of already-planned edges by one more.

    Every estimate is a function of the *set* of planned edges, never of
    their order, which is what makes the subset DP exact.
    """

    def __init__(self, q: ConjunctiveQuery, cat: Catalog):
        self.q = q
        self.cat = cat

    def var_estimate(self, planned: Sequence[QueryEdge], var: str) -> float:
        if not is_var(var):
            return 1.0
        incident = [e for e in planned if var in e.vars]
        ests = [float(self.cat.distinct(e.label, role(e, var))) for e in incident]
        for e1, e2 in itertools.combinations(incident, 2):
            ests.append(float(self.cat.key_count(e1.label, e2.label, role(e1, var) + role(e2, var))))
        return min(ests) if ests else float("inf")

    def bound_size(self, planned: Sequence[QueryEdge], e: QueryEdge, var: str) -> float:
        size = self.var_estimate(planned, var)
        r = role(e, var)
        keys = [
            self.cat.key_count(e.label, f.label, r + role(f, var))
            for f in planned
            if var in f.vars
        ]
        if keys:
            size = min(size, float(min(keys)))
        return size

    def step(self, planned: Sequence[QueryEdge], e: QueryEdge) -> float:
        bound_vars = {v for f in planned for v in f.vars}
        src_bound = not is_var(e.src) or e.src in bound_vars
        dst_bound = (not is_var(e.dst) or e.dst in bound_vars) and e.dst != e.src
        if src_bound and dst_bound:
            size = self.bound_size(planned, e, e.src) * self.bound_size(planned, e, e.dst)
            return estimate_pattern_cardinality(self.cat, e.label, BOUND_BOTH, size)
        if src_bound:
            return estimate_pattern_cardinality(self.cat, e.label, BOUND_SUBJECT, self.bound_size(planned, e, e.src))
        if dst_bound:
            return estimate_pattern_cardinality(self.cat, e.label, BOUND_OBJECT, self.bound_size(planned, e, e.dst))
        return estimate_pattern_cardinality(self.cat, e.label, BOUND_NONE)

    def order_cost(self, order: Sequence[QueryEdge]) -> float:
        cost = 0.0
        for i, e in enumerate(order):
            cost = cost + self.step(order[:i], e)
        return cost


def is_connected_order(order: Sequence[QueryEdge]) -> bool:
    seen: set[str] = set()
    for i, e in enumerate(order):
        if i and not seen.intersection(e.vars):
            return False
        seen.update(e.vars)
    return True


def connected_orders(q: ConjunctiveQuery) -> Iterator[tuple[QueryEdge, ...]]:
    """Every connected left-deep order (brute force; small queries only)."""
    for perm in itertools.permutations(q.edges):
        if is_connected_order(perm):
            yield perm


def plan_edgifier(q: ConjunctiveQuery, cat: Catalog) -> EdgePlan:
    """Bottom-up DP over subsets of query edges.

    Minimizes the estimated total edge walks. Ties go to the order whose
    first edge has the smallest label count, then to the lexicographically
    smallest sequence of edge indices.
    """
    model = CostModel(q, cat)
    edges = list(q.edges)
    n = len(edges)
    # mask -> (cost, first-edge count, index sequence)
    best: dict[int, tuple[float, int, tuple[int, ...]]] = {0: (0.0, 0, ())}
    edge_vars = [set(e.vars) for e in edges]
    for size in range(n):
        layer = [m for m in best if bin(m).count("1") == size]
        for mask in layer:
            cost, first, seq = best[mask]
            planned = [edges[i] for i in seq]
            bound = set().union(*(edge_vars[i] for i in seq)) if seq else set()
            for j in range(n):
                if mask >> j & 1:
                    continue
                if seq and not bound & edge_vars[j]:
                    continue
                cand = (
                    cost + model.step(planned, edges[j]),
                    first if seq else cat.count(edges[j].label),
                    seq + (j,),
                )
                nxt = mask | 1 << j
                if nxt not in best or cand < best[nxt]:
                    best[nxt] = cand
    cost, _, seq = best[(1 << n) - 1]
    order = [edges[i] for i in seq]

    plan = EdgePlan(order=order, est_cost=cost)
    for e in edges:
        if cat.onegram(e.label) is None:
            plan.warnings.append(f"label {e.label!r} not in catalog")
    for i, e in enumerate(order):
        planned = order[: i + 1]
        plan.steps.append(
            {
                "edge": str(e),
                "walks": model.step(order[:i], e),
                "cands": {v: model.var_estimate(planned, v) for v in e.vars},
            }
        )
    return plan


# ---------------------------------------------------------------------------
# Triangulator


@dataclass(eq=False)
class Chord:
    """A predicate-less variable pair added to bisect a query cycle."""

    u: str
    v: str
    # Opposite side pairs of every triangle the chord belongs to.
    triangles: list[tuple["Side", "Side"]] = field(default_factory=list)
    est: float = 0.0

    @property
    def vars(self) -> tuple[str, str]:
        return (self.u, self.v)

    def __repr__(self) -> str:
        return f"Chord({self.u},{self.v})"

    def __str__(self) -> str:
        return f"{self.u}~{self.v}"


Side = Union[QueryEdge, Chord]


def side_vars(side: Side) -> tuple[str, str]:
    if isinstance(side, Chord):
        return (side.u, side.v)
    return (side.src, side.dst)


@dataclass
class TriangulationPlan:
    chords: list[Chord]
    # Each triangle lists its sides; a chord's producing triangle precedes
    # any triangle that uses the chord as a side.
    triangles: list[tuple[Side, Side, Side]]
    est_cost: float

    def to_json(self) -> dict:
        return {
            "chords": [[c.u, c.v] for c in self.chords],
            "triangles": [[str(s) for s in t] for t in self.triangles],
            "estCost": self.est_cost,
        }


class PolygonCost:
    """Estimated materialization sizes for triangles of one query cycle.

    Vertices are numbered around the cycle; ``(i, i+1)`` and ``(0, n-1)`` are
    query edges, every other vertex pair is a potential chord.
    """

    def __init__(self, q: ConjunctiveQuery, cycle: Sequence[str], cat: Catalog):
        self.cycle = list(cycle)
        self.n = len(cycle)
        self.cat = cat
        self.ring: dict[tuple[int, int], QueryEdge] = {}
        for i in range(self.n):
            j = (i + 1) % self.n
            a, b = self.cycle[i], self.cycle[j]
            edge = min(
                (e for e in q.edges if {e.src, e.dst} == {a, b}),
                key=lambda e: e.idx,
            )
            self.ring[min(i, j), max(i, j)] = edge
        self._chord_est: dict[tuple[int, int], float] = {}

    def is_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.ring

    def side_est(self, i: int, j: int) -> float:
        if self.is_edge(i, j):
            return float(self.cat.count(self.ring[i, j].label))
        key = (i, j)
        if key not in self._chord_est:
            self._chord_est[key] = min(self.join_est(i, k, j) for k in range(i + 1, j))
        return self._chord_est[key]

    def join_est(self, a: int, shared: int, b: int) -> float:
        """Estimated size of the join of sides (a, shared) and (shared, b)."""
        s1 = (min(a, shared), max(a, shared))
        s2 = (min(b, shared), max(b, shared))
        n1, n2 = self.side_est(*s1), self.side_est(*s2)
        product = n1 * n2
        if product == 0:
            return 0.0
        if self.is_edge(*s1) and self.is_edge(*s2):
            var = self.cycle[shared]
            e1, e2 = self.ring[s1], self.ring[s2]
            r1, r2 = role(e1, var), role(e2, var)
            keys = self.cat.key_count(e1.label, e2.label, r1 + r2)
            fan1 = n1 / self.cat.distinct(e1.label, r1)
            fan2 = n2 / self.cat.distinct(e2.label, r2)
            return min(product, keys * fan1 * fan2)
        return product

    def triangle(self, i: int, k: int, j: int) -> float:
        """Estimated size of the triangle on vertices i < k < j."""
        return min(self.join_est(i, k, j), self.join_est(k, i, j), self.join_est(i, j, k))


def triangulate_cycle(cost: PolygonCost) -> tuple[float, list[tuple[int, int, int]]]:
    """Polygon-triangulation DP; returns (cost, triangles in dependency order)."""
    n = cost.n
    # (i, j) -> (cost, sorted chord list, triangles)
    table: dict[tuple[int, int], tuple[float, tuple, list]] = {}
    for i in range(n - 1):
        table[i, i + 1] = (0.0, (), [])
    for span in range(2, n):
        for i in range(n - span):
            j = i + span
            best = None
            for k in range(i + 1, j):
                lc, lch, ltr = table[i, k]
                rc, rch, rtr = table[k, j]
                chords = lch + rch + (((i, j),) if (i, j) != (0, n - 1) else ())
                cand = (lc + rc + cost.triangle(i, k, j), tuple(sorted(chords)), ltr + rtr + [(i, k, j)])
                if best is None or cand[:2] < best[:2]:
                    best = cand
            table[i, j] = best
    c, _, tris = table[0, n - 1]
    return c, tris


def plan_triangulation(
    q: ConjunctiveQuery, shape: Optional[QueryShape], cat: Catalog
) -> TriangulationPlan:
    shape = shape or analyze_shape(q)
    chords: dict[frozenset, Chord] = {}
    triangles: list[tuple[Side, Side, Side]] = []
    total = 0.0
    for cycle in shape.cycles:
        cost = PolygonCost(q, cycle, cat)
        c, tris = triangulate_cycle(cost)
        total += c

        def side(i: int, j: int) -> Side:
            if cost.is_edge(i, j):
                return cost.ring[i, j]
            key = frozenset((cycle[i], cycle[j]))
            if key not in chords:
                chords[key] = Chord(cycle[i], cycle[j], est=cost.side_est(i, j))
            return chords[key]

        for i, k, j in tris:
            sides = (side(i, k), side(k, j), side(i, j))
            triangles.append(sides)
            for pos, s in enumerate(sides):
                if isinstance(s, Chord):
                    a, b = (x for idx, x in enumerate(sides) if idx != pos)
                    s.triangles.append((a, b))
    return TriangulationPlan(chords=list(chords.values()), triangles=triangles, est_cost=total)


def enumerate_triangulations(n: int) -> list[list[tuple[int, int, int]]]:
    """All triangulations of a convex n-gon (brute force)."""

    def rec(i: int, j: int) -> list[list[tuple[int, int, int]]]:
        if j - i < 2:
            return [[]]
        out = []
        for k in range(i + 1, j):
            for left in rec(i, k):
                for right in rec(k, j):
                    out.append(left + right + [(i, k, j)])
        return out

    return rec(0, n - 1)


# ---------------------------------------------------------------------------
# Defactorizer


@dataclass
class DefacPlan:
    order: list[QueryEdge]

    def to_json(self) -> dict:
        return {"order": [str(e) for e in self.order]}


def greedy_order(q: ConjunctiveQuery, sizes: dict[QueryEdge, int]) -> list[QueryEdge]:
    remaining = sorted(q.edges, key=lambda e: (sizes[e], e.idx))
    order = [remaining.pop(0)]
    bound = set(order[0].vars)
    while remaining:
        nxt = next(e for e in remaining if bound & set(e.vars))
        remaining.remove(nxt)
        order.append(nxt)
        bound.update(nxt.vars)
    return order


def plan_defactorization(q: ConjunctiveQuery, ag: "AnswerGraph") -> DefacPlan:
    """Greedy connected join order by materialized answer-edge set sizes."""
    return DefacPlan(greedy_order(q, {e: ag.size(e) for e in q.edges}))


def plans_json(plan: EdgePlan, tplan: Optional[TriangulationPlan] = None) -> str:
    doc = {"edgePlan": plan.to_json()}
    if tplan is not None:
        doc["triangulation"] = tplan.to_json()
    return json.dumps(doc, indent=2)
