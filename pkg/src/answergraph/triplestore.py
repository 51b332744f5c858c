"""Dictionary-encoded, in-memory triple store with six permutation indexes."""

from __future__ import annotations

import io
import json
from bisect import bisect_left
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Union

# Index name -> positions of (s, p, o) in key order.
PERMUTATIONS = {
    "spo": (0, 1, 2),
    "sop": (0, 2, 1),
    "pso": (1, 0, 2),
    "pos": (1, 2, 0),
    "osp": (2, 0, 1),
    "ops": (2, 1, 0),
}


class ParseError(ValueError):
    """Raised for malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Triple(NamedTuple):
    s: int
    p: int
    o: int


class Dictionary:
    """Bijective term <-> dense id map, ids assigned in first-seen order."""

    def __init__(self, terms: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._terms: list[str] = []
        for term in terms:
            self.add(term)

    def add(self, term: str) -> int:
        tid = self._ids.get(term)
        if tid is None:
            tid = len(self._terms)
            self._ids[term] = tid
            self._terms.append(term)
        return tid

    def encode(self, term: str) -> Optional[int]:
        return self._ids.get(term)

    def decode(self, tid: int) -> str:
        return self._terms[tid]

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._ids

    def __iter__(self) -> Iterator[str]:
        return iter(self._terms)


def clean_token(token: str) -> str:
    if len(token) >= 2 and token[0] == "<" and token[-1] == ">":
        return token[1:-1]
    return token


def _split_line(line: str, lineno: int) -> Optional[tuple[str, str, str]]:
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    tokens = text.split()
    # Trailing comment after the terminating dot.
    for i, tok in enumerate(tokens):
        if tok.startswith("#") and i >= 3:
            tokens = tokens[:i]
            break
    if tokens and tokens[-1] == ".":
        tokens = tokens[:-1]
    elif len(tokens) == 3 and tokens[-1].startswith("<") and tokens[-1].endswith(">."):
        tokens[-1] = tokens[-1][:-1]
    if len(tokens) != 3:
        raise ParseError(f"expected 3 terms, got {len(tokens)}", lineno)
    s, p, o = (clean_token(t) for t in tokens)
    if not s or not p or not o:
        raise ParseError("empty term", lineno)
    return s, p, o


class TripleStore:
    """Immutable set of distinct (s, p, o) triples.

    Nodes and predicates live in separate id spaces. Every permutation of
    (s, p, o) is kept as a sorted list of key tuples; a scan picks the
    permutation whose bound positions form a key prefix and bisects into it.
    """

    def __init__(self, nodes: Dictionary, predicates: Dictionary, triples: Iterable[tuple[int, int, int]]):
        self.nodes = nodes
        self.predicates = predicates
        self.triples: frozenset[Triple] = frozenset(Triple(*t) for t in triples)
        self.indexes: dict[str, list[tuple[int, int, int]]] = {}
        for name, perm in PERMUTATIONS.items():
            self.indexes[name] = sorted(tuple(t[i] for i in perm) for t in self.triples)

    @classmethod
    def from_terms(cls, triples: Iterable[tuple[str, str, str]]) -> "TripleStore":
        nodes, preds = Dictionary(), Dictionary()
        encoded = []
        for s, p, o in triples:
            sid = nodes.add(s)
            pid = preds.add(p)
            oid = nodes.add(o)
            encoded.append((sid, pid, oid))
        return cls(nodes, preds, encoded)

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self.triples

    def stats(self) -> dict:
        return {"triples": len(self.triples), "nodes": len(self.nodes), "predicates": len(self.predicates)}

    def stats_json(self) -> str:
        return json.dumps(self.stats())

    def decode(self, triple: tuple[int, int, int]) -> tuple[str, str, str]:
        s, p, o = triple
        return self.nodes.decode(s), self.predicates.decode(p), self.nodes.decode(o)

    def _choose_index(self, bound: tuple[bool, bool, bool]) -> str:
        nbound = sum(bound)
        for name, perm in PERMUTATIONS.items():
            if all(bound[i] for i in perm[:nbound]):
                return name
        raise AssertionError("unreachable")

    def scan(
        self,
        s: Optional[int] = None,
        p: Optional[int] = None,
        o: Optional[int] = None,
        index: Optional[str] = None,
    ) -> Iterator[Triple]:
        """Yield the triples matching every bound (non-None) position.

        ``index`` forces a permutation; bound positions that are not part of
        its key prefix are then checked by filtering.
        """
        pattern = (s, p, o)
        bound = tuple(x is not None for x in pattern)
        if index is None:
            index = self._choose_index(bound)
        perm = PERMUTATIONS[index]
        keys = self.indexes[index]
        prefix = []
        for pos in perm:
            if pattern[pos] is None:
                break
            prefix.append(pattern[pos])
        if prefix:
            lo = bisect_left(keys, tuple(prefix))
            hi_prefix = prefix[:-1] + [prefix[-1] + 1]
            hi = bisect_left(keys, tuple(hi_prefix))
        else:
            lo, hi = 0, len(keys)
        inverse = [perm.index(i) for i in range(3)]
        rest = [pos for pos in range(3) if pattern[pos] is not None and pos not in perm[: len(prefix)]]
        for i in range(lo, hi):
            key = keys[i]
            if rest and any(key[inverse[pos]] != pattern[pos] for pos in rest):
                continue
            yield Triple(key[inverse[0]], key[inverse[1]], key[inverse[2]])

    def dump_snapshot(self, fp: IO[str]) -> None:
        json.dump(
            {
                "nodes": list(self.nodes),
                "predicates": list(self.predicates),
                "triples": sorted(self.triples),
            },
            fp,
        )

    @classmethod
    def load_snapshot(cls, fp: IO[str]) -> "TripleStore":
        try:
            data = json.load(fp)
            return cls(Dictionary(data["nodes"]), Dictionary(data["predicates"]), data["triples"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad store snapshot: {exc}") from exc


def load_ntriples(source: Union[IO[bytes], IO[str], bytes, str]) -> TripleStore:
    """Parse whitespace-separated triples (N-Triples subset) into a store.

    ``#`` starts a comment line, a trailing ``.`` is optional and angle
    brackets around terms are stripped.
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    parsed = []
    for lineno, line in enumerate(source, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError("invalid UTF-8", lineno) from exc
        terms = _split_line(line, lineno)
        if terms is not None:
            parsed.append(terms)
    return TripleStore.from_terms(parsed)


def open_store(path: str) -> TripleStore:
    """Load either a JSON snapshot (``.json``) or a triple text file."""
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fp:
            return TripleStore.load_snapshot(fp)
    with open(path, "rb") as fp:
        return load_ntriples(fp)
