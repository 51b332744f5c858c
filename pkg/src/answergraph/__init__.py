"""Answer-graph evaluation of conjunctive graph queries."""

from .catalog import Catalog, build_catalog, estimate_pattern_cardinality, load_catalog, save_catalog
from .engine import (
    AnswerGraph,
    Options,
    count_embeddings,
    edge_burnback,
    evaluate,
    extend_edge,
    generate_answer_graph,
    generate_embeddings,
    maintain_chord,
    node_burnback,
)
from .planner import plan_defactorization, plan_edgifier, plan_triangulation
from .query import ConjunctiveQuery, QueryEdge, analyze_shape, instantiate, parse_query
from .triplestore import ParseError, TripleStore, load_ntriples

__all__ = [
    "AnswerGraph",
    "Catalog",
    "ConjunctiveQuery",
    "Options",
    "ParseError",
    "QueryEdge",
    "TripleStore",
    "analyze_shape",
    "build_catalog",
    "count_embeddings",
    "edge_burnback",
    "estimate_pattern_cardinality",
    "evaluate",
    "extend_edge",
    "generate_answer_graph",
    "generate_embeddings",
    "instantiate",
    "load_catalog",
    "load_ntriples",
    "maintain_chord",
    "node_burnback",
    "parse_query",
    "plan_defactorization",
    "plan_edgifier",
    "plan_triangulation",
    "save_catalog",
]
