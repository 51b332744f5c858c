"""Exact 1-gram / 2-gram edge-label statistics and the cardinality estimator."""

from __future__ import annotations

import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Optional, Union

from .triplestore import ParseError, TripleStore

# Join types: first letter is the role of the joined node in p1, second in p2.
JOIN_TYPES = ("ss", "so", "os", "oo")

BOUND_NONE = "none"
BOUND_SUBJECT = "subject"
BOUND_OBJECT = "object"
BOUND_BOTH = "both"


@dataclass(frozen=True)
class OneGram:
    count: int
    dsubj: int
    dobj: int


@dataclass(frozen=True)
class TwoGram:
    pairs: int
    keys: int


def flip(jt: str) -> str:
    return jt[::-1]


@dataclass
class Catalog:
    """Per-label statistics keyed by predicate text."""

    onegrams: dict[str, OneGram] = field(default_factory=dict)
    twograms: dict[tuple[str, str, str], TwoGram] = field(default_factory=dict)
    total_triples: int = 0

    def onegram(self, pred: str) -> Optional[OneGram]:
        return self.onegrams.get(pred)

    def count(self, pred: str) -> int:
        g = self.onegrams.get(pred)
        return g.count if g else 0

    def distinct(self, pred: str, role: str) -> int:
        """Distinct nodes of ``pred`` in role 's' or 'o' (0 if absent)."""
        g = self.onegrams.get(pred)
        if g is None:
            return 0
        return g.dsubj if role == "s" else g.dobj

    def key_count(self, p1: str, p2: str, jt: str) -> int:
        g = self.twograms.get((p1, p2, jt))
        return g.keys if g else 0

    def pair_count(self, p1: str, p2: str, jt: str) -> int:
        g = self.twograms.get((p1, p2, jt))
        return g.pairs if g else 0


def build_catalog(store: TripleStore) -> Catalog:
    """Count every 1-gram and every nonzero 2-gram exactly."""
    preds = store.predicates
    count: Counter = Counter()
    subjects: dict[int, set] = defaultdict(set)
    objects: dict[int, set] = defaultdict(set)
    # node -> role -> predicate -> number of triples
    by_node: dict[int, dict[str, Counter]] = defaultdict(lambda: {"s": Counter(), "o": Counter()})
    for s, p, o in store.triples:
        count[p] += 1
        subjects[p].add(s)
        objects[p].add(o)
        by_node[s]["s"][p] += 1
        by_node[o]["o"][p] += 1

    cat = Catalog(total_triples=len(store))
    for p, c in count.items():
        cat.onegrams[preds.decode(p)] = OneGram(c, len(subjects[p]), len(objects[p]))

    pairs: Counter = Counter()
    keys: Counter = Counter()
    for roles in by_node.values():
        for jt in JOIN_TYPES:
            left, right = roles[jt[0]], roles[jt[1]]
            for p1, c1 in left.items():
                for p2, c2 in right.items():
                    pairs[p1, p2, jt] += c1 * c2
                    keys[p1, p2, jt] += 1
    for (p1, p2, jt), n in pairs.items():
        cat.twograms[preds.decode(p1), preds.decode(p2), jt] = TwoGram(n, keys[p1, p2, jt])
    return cat


def estimate_pattern_cardinality(cat: Catalog, pred: str, bound: str = BOUND_NONE, bound_size: float = 0.0) -> float:
    """Expected number of matching edges under the uniform fan-out model.

    ``bound_size`` is the number of candidate nodes on the bound side; for
    ``both`` it is the product of the two candidate-set sizes.
    """
    g = cat.onegrams.get(pred)
    if g is None or g.count == 0:
        return 0.0
    if bound == BOUND_NONE:
        return float(g.count)
    size = max(bound_size, 0.0)
    if bound == BOUND_SUBJECT:
        return size * g.count / g.dsubj
    if bound == BOUND_OBJECT:
        return size * g.count / g.dobj
    if bound == BOUND_BOTH:
        return size * g.count / (g.dsubj * g.dobj)
    raise ValueError(f"unknown bound side {bound!r}")


HEADER = "#catalog\tv1"


def save_catalog(cat: Catalog, fp: Optional[IO[str]] = None) -> str:
    """Write the TSV form; returns the text (also written to ``fp`` if given)."""
    lines = [HEADER, f"#total\t{cat.total_triples}"]
    for pred in sorted(cat.onegrams):
        g = cat.onegrams[pred]
        lines.append(f"1G\t{pred}\t{g.count}\t{g.dsubj}\t{g.dobj}")
    for key in sorted(cat.twograms):
        g = cat.twograms[key]
        lines.append("2G\t{}\t{}\t{}\t{}\t{}".format(*key, g.pairs, g.keys))
    text = "\n".join(lines) + "\n"
    if fp is not None:
        fp.write(text)
    return text


def _nonneg(field_text: str, lineno: int) -> int:
    try:
        value = int(field_text)
    except ValueError:
        raise ParseError(f"not an integer: {field_text!r}", lineno) from None
    if value < 0:
        raise ParseError(f"negative count {value}", lineno)
    return value


def load_catalog(source: Union[str, IO[str]]) -> Catalog:
    if isinstance(source, str):
        source = io.StringIO(source)
    cat = Catalog()
    total = None
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if fields[0] == "#total":
            if len(fields) != 2:
                raise ParseError("bad #total line", lineno)
            total = _nonneg(fields[1], lineno)
        elif fields[0].startswith("#"):
            continue
        elif fields[0] == "1G":
            if len(fields) != 5:
                raise ParseError("1G line needs 5 fields", lineno)
            count, dsubj, dobj = (_nonneg(f, lineno) for f in fields[2:])
            if count and not (1 <= dsubj <= count and 1 <= dobj <= count):
                raise ParseError("distinct counts out of range", lineno)
            cat.onegrams[fields[1]] = OneGram(count, dsubj, dobj)
        elif fields[0] == "2G":
            if len(fields) != 6:
                raise ParseError("2G line needs 6 fields", lineno)
            if fields[3] not in JOIN_TYPES:
                raise ParseError(f"unknown join type {fields[3]!r}", lineno)
            pairs, keys = (_nonneg(f, lineno) for f in fields[4:])
            if (pairs == 0) != (keys == 0):
                raise ParseError("pairs and keys must be zero together", lineno)
            cat.twograms[fields[1], fields[2], fields[3]] = TwoGram(pairs, keys)
        else:
            raise ParseError(f"unknown record type {fields[0]!r}", lineno)
    cat.total_triples = total if total is not None else sum(g.count for g in cat.onegrams.values())
    return cat
