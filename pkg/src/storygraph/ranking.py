"""BM25 scoring of canonical entities and top-set selection."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .entities import Entity
from .textindex import Bm25Params, InvertedIndex, bm25_term, tokenize

AGGREGATIONS = ("sum", "max", "mentions")


@dataclass
class RankedEntities:
    entries: list[tuple[Entity, float]]  # sorted by score desc, key asc
    k: int


def score_entity(
    entity: Entity,
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
    aggregation: str = "sum",
) -> float:
    """Score an entity against the session index.

    Default aggregation sums, over every document containing the entity,
    the per-token BM25 of the entity's surface tokens: distinctive terms
    that recur across the session corpus score highest. "max" keeps only
    the best document; "mentions" is a plain mention count.
    """
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    if aggregation == "mentions":
        return float(len(entity.mentions))
    if index.n == 0:
        raise ValueError("cannot score against an empty index")
    terms = [t.text for t in tokenize(entity.key[0])]
    per_doc = []
    for doc_id in sorted(entity.doc_ids):
        per_doc.append(sum(bm25_term(term, doc_id, index, params) for term in terms))
    if not per_doc:
        return 0.0
    return max(per_doc) if aggregation == "max" else sum(per_doc)


def rank_entities(
    entities: list[Entity],
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
    k: int = 15,
    aggregation: str = "sum",
) -> RankedEntities:
    """Top-k entities by score, zero scores excluded, ties broken by key."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = []
    for entity in entities:
        s = score_entity(entity, index, params, aggregation)
        if s > 0.0:
            scored.append((replace(entity, score=s), s))
    scored.sort(key=lambda item: (-item[1], item[0].key))
    return RankedEntities(entries=scored[:k], k=k)
