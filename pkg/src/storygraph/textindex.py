"""Tokenization, per-session inverted index construction, and BM25 scoring.

The index is built fresh for each search session. Tokenization of the
documents may fan out to a process pool; the merge into postings is a
single ordered reduction, so the resulting index is identical for any
worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

# A token is a maximal run of alphanumeric code points; apostrophes and
# hyphens are kept only between alphanumerics ("state-of-the-art", "o'neill").
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*")


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int
    position: int


def tokenize(text: str) -> list[Token]:
    """Split text into lowercased word tokens with code-point offsets."""
    return [
        Token(m.group(0).lower(), m.start(), m.end(), i)
        for i, m in enumerate(_TOKEN_RE.finditer(text))
    ]


def _term_stream(text: str) -> list[str]:
    # Tokenize-for-indexing: positions are implicit in list order.
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class Posting:
    doc_id: str
    tf: int
    positions: list[int]


@dataclass
class InvertedIndex:
    postings: dict[str, list[Posting]] = field(default_factory=dict)
    n: int = 0
    doc_lengths: dict[str, int] = field(default_factory=dict)
    avgdl: float = 0.0

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc_id: str) -> int:
        for p in self.postings.get(term, ()):
            if p.doc_id == doc_id:
                return p.tf
        return 0

    def terms(self) -> list[str]:
        return sorted(self.postings)


def build_index(docs, workers: int = 1) -> InvertedIndex:
    """Index the documents' body text.

    The output is identical for every ``workers`` value: tokenization is
    per-document and the merge walks documents in input order, then sorts
    each postings list by doc id.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    seen: set[str] = set()
    for d in docs:
        if d.id in seen:
            raise ValueError(f"duplicate doc id: {d.id}")
        seen.add(d.id)

    bodies = [d.body for d in docs]
    if workers == 1 or len(bodies) < 2:
        streams = [_term_stream(b) for b in bodies]
    else:
        chunk = max(1, len(bodies) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            streams = list(pool.map(_term_stream, bodies, chunksize=chunk))

    by_term: dict[str, dict[str, list[int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc, terms in zip(docs, streams):
        doc_lengths[doc.id] = len(terms)
        for pos, term in enumerate(terms):
            by_term.setdefault(term, {}).setdefault(doc.id, []).append(pos)

    postings = {
        term: [Posting(doc_id, len(ps), ps) for doc_id, ps in sorted(docs_map.items())]
        for term, docs_map in by_term.items()
    }
    n = len(bodies)
    avgdl = sum(doc_lengths.values()) / n if n else 0.0
    return InvertedIndex(postings, n, doc_lengths, avgdl)


def _idf(n: int, df: int) -> float:
    # Nonnegative form: ln(1 + x) with x > 0 for any df in [1, n].
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def bm25_term(term: str, doc_id: str, index: InvertedIndex, params: Bm25Params = Bm25Params()) -> float:
    """Single-term BM25 contribution of ``term`` to ``doc_id``; 0 when absent."""
    if index.n == 0:
        raise ValueError("cannot score against an empty index")
    if doc_id not in index.doc_lengths:
        raise KeyError(f"unknown doc id: {doc_id}")
    plist = index.postings.get(term, ())
    tf = 0
    for p in plist:
        if p.doc_id == doc_id:
            tf = p.tf
            break
    if tf == 0:
        return 0.0
    dl = index.doc_lengths[doc_id]
    norm = params.k1 * (1.0 - params.b + params.b * dl / index.avgdl)
    return _idf(index.n, len(plist)) * tf * (params.k1 + 1.0) / (tf + norm)


def bm25_query(
    terms: list[str],
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
    k: int = 10,
) -> list[tuple[str, float]]:
    """Top-k documents by summed per-term BM25, ties broken by ascending doc id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores: dict[str, float] = {}
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index.n, len(plist))
        for p in plist:
            dl = index.doc_lengths[p.doc_id]
            norm = params.k1 * (1.0 - params.b + params.b * dl / index.avgdl)
            gain = idf * p.tf * (params.k1 + 1.0) / (p.tf + norm)
            scores[p.doc_id] = scores.get(p.doc_id, 0.0) + gain
    ranked = sorted(
        ((doc_id, s) for doc_id, s in scores.items() if s > 0.0),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def index_to_json(index: InvertedIndex) -> dict:
    """Debug dump: n, avgdl, doc_lengths and postings with terms sorted."""
    return {
        "n": index.n,
        "avgdl": index.avgdl,
        "doc_lengths": {doc_id: index.doc_lengths[doc_id] for doc_id in sorted(index.doc_lengths)},
        "postings": {
            term: [[p.doc_id, p.tf, p.positions] for p in index.postings[term]]
            for term in index.terms()
        },
    }


def index_digest(index: InvertedIndex) -> str:
    blob = json.dumps(index_to_json(index), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
