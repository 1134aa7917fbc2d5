"""Document collections: JSONL loading, near-duplicate removal, annotation export.

Corpus files are UTF-8 JSONL, one object per line with keys
``id, source, title, body, url, published_at, topic`` (the last three
nullable). Near-duplicate detection compares k-token shingle sets with
Jaccard similarity over the same lowercased token stream the index uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

from .textindex import tokenize

SOURCES = ("articles", "companies", "officers", "web")
DOC_SOURCES = SOURCES + ("fixture",)


class CorpusError(ValueError):
    """Bad corpus data; message carries file/line context when available."""


@dataclass
class Document:
    id: str
    source: str
    title: str
    body: str
    url: str = ""
    published_at: str | None = None
    topic: str | None = None


def document_from_json(obj: dict, where: str = "") -> Document:
    ctx = f"{where}: " if where else ""
    if not isinstance(obj, dict):
        raise CorpusError(f"{ctx}record is not a JSON object")
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError(f"{ctx}missing or empty 'id'")
    source = obj.get("source")
    if source not in DOC_SOURCES:
        raise CorpusError(f"{ctx}unknown source {source!r}")
    title = obj.get("title")
    body = obj.get("body")
    if not isinstance(title, str) or not isinstance(body, str):
        raise CorpusError(f"{ctx}'title' and 'body' must be strings")
    url = obj.get("url") or ""
    if not isinstance(url, str):
        raise CorpusError(f"{ctx}'url' must be a string or null")
    published = obj.get("published_at")
    if published is not None:
        if not isinstance(published, str):
            raise CorpusError(f"{ctx}'published_at' must be an ISO date or null")
        try:
            date.fromisoformat(published)
        except ValueError:
            try:
                datetime.fromisoformat(published)
            except ValueError:
                raise CorpusError(f"{ctx}'published_at' is not an ISO date: {published!r}") from None
    topic = obj.get("topic")
    if topic is not None and not isinstance(topic, str):
        raise CorpusError(f"{ctx}'topic' must be a string or null")
    return Document(doc_id, source, title, body, url, published, topic)


def document_to_json(doc: Document) -> dict:
    return {
        "id": doc.id,
        "source": doc.source,
        "title": doc.title,
        "body": doc.body,
        "url": doc.url,
        "published_at": doc.published_at,
        "topic": doc.topic,
    }


def load_corpus(path) -> list[Document]:
    """Read a JSONL corpus file, in file order, verifying ids are unique."""
    p = Path(path)
    if not p.is_file():
        raise CorpusError(f"corpus file not found: {p}")
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with p.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{p}:{line_no}: invalid JSON ({exc.msg})") from None
            doc = document_from_json(obj, where=f"{p}:{line_no}")
            if doc.id in seen:
                raise CorpusError(
                    f"{p}:{line_no}: duplicate id {doc.id!r} (first seen on line {seen[doc.id]})"
                )
            seen[doc.id] = line_no
            docs.append(doc)
    return docs


def matches_all_terms(doc: Document, terms: list[str]) -> bool:
    """Case-insensitive conjunctive token containment over title + body."""
    have = {t.text for t in tokenize(doc.title)} | {t.text for t in tokenize(doc.body)}
    return all(t in have for t in terms)


# --- near-duplicate removal -------------------------------------------------

@dataclass
class DedupReport:
    kept: list[str]
    dropped: list[tuple[str, str, float]]  # (dropped_id, kept_id, jaccard)


def _signature(body: str, k: int):
    terms = [t.text for t in tokenize(body)]
    if len(terms) < k:
        # Too short for shingling: compare by exact token sequence.
        return tuple(terms)
    return frozenset(tuple(terms[i : i + k]) for i in range(len(terms) - k + 1))


def _similarity(sig_a, sig_b) -> float:
    if isinstance(sig_a, tuple) or isinstance(sig_b, tuple):
        return 1.0 if sig_a == sig_b else 0.0
    union = len(sig_a | sig_b)
    return len(sig_a & sig_b) / union if union else 0.0


def dedup(docs: list[Document], shingle_k: int = 5, threshold: float = 0.8) -> DedupReport:
    """Greedy pass in input order: drop a document iff its shingle Jaccard
    with some earlier kept document reaches the threshold."""
    return dedup_against(docs, [], shingle_k=shingle_k, threshold=threshold)


def dedup_against(
    docs: list[Document],
    existing: list[Document],
    shingle_k: int = 5,
    threshold: float = 0.8,
) -> DedupReport:
    """Like :func:`dedup`, but documents in ``existing`` are treated as already
    kept; the report covers only ``docs``."""
    if shingle_k < 1:
        raise ValueError(f"shingle_k must be >= 1, got {shingle_k}")
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    kept_sigs: list[tuple[str, object]] = [
        (d.id, _signature(d.body, shingle_k)) for d in existing
    ]
    kept: list[str] = []
    dropped: list[tuple[str, str, float]] = []
    for doc in docs:
        sig = _signature(doc.body, shingle_k)
        hit = None
        for kept_id, kept_sig in kept_sigs:
            j = _similarity(sig, kept_sig)
            if j >= threshold:
                hit = (doc.id, kept_id, j)
                break
        if hit is None:
            kept.append(doc.id)
            kept_sigs.append((doc.id, sig))
        else:
            dropped.append(hit)
    return DedupReport(kept=kept, dropped=dropped)


# --- annotation sets ---------------------------------------------------------

@dataclass
class AnnotationSet:
    buckets: dict[str, list[Document]]
    shortfalls: dict[str, int] = field(default_factory=dict)  # topic -> matched count


def build_annotation_set(
    docs: list[Document],
    topics: list[tuple[str, str]],
    per_topic_min: int,
    per_topic_max: int,
) -> AnnotationSet:
    """Bucket documents by topic query, capped at per_topic_max per topic;
    topics matching fewer than per_topic_min documents are flagged."""
    if not topics:
        raise ValueError("no topics given")
    if per_topic_min > per_topic_max:
        raise ValueError("per_topic_min must not exceed per_topic_max")
    result = AnnotationSet(buckets={})
    for name, query in topics:
        terms = [t.text for t in tokenize(query)]
        matched = [d for d in docs if matches_all_terms(d, terms)]
        if len(matched) < per_topic_min:
            result.shortfalls[name] = len(matched)
        result.buckets[name] = matched[:per_topic_max]
    return result


# --- labeled-span export ------------------------------------------------------

@dataclass
class AnnotatedDocument:
    text: str
    labels: list[tuple[int, int, str]]  # (char start, char end, label)


def validate_annotated(doc: AnnotatedDocument, where: str = "") -> None:
    ctx = f"{where}: " if where else ""
    for start, end, label in doc.labels:
        if not (0 <= start < end <= len(doc.text)):
            raise CorpusError(f"{ctx}bad span ({start}, {end}) for text of length {len(doc.text)}")
        if not isinstance(label, str) or not label:
            raise CorpusError(f"{ctx}empty label on span ({start}, {end})")
    spans = sorted((s, e) for s, e, _ in doc.labels)
    for (s1, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise CorpusError(f"{ctx}overlapping spans ({s1}, {e1}) and starting at {s2}")


def export_annotations(annotated: list[AnnotatedDocument], path) -> None:
    """Write one JSON object per line: {"text": ..., "labels": [[s, e, label], ...]}."""
    records = []
    for i, doc in enumerate(annotated):
        validate_annotated(doc, where=f"document {i}")
        records.append(
            json.dumps(
                {"text": doc.text, "labels": [[s, e, label] for s, e, label in doc.labels]},
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(records) + ("\n" if records else ""), encoding="utf-8")


def import_annotations(path) -> list[AnnotatedDocument]:
    p = Path(path)
    if not p.is_file():
        raise CorpusError(f"annotation file not found: {p}")
    out: list[AnnotatedDocument] = []
    with p.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{p}:{line_no}: invalid JSON ({exc.msg})") from None
            text = obj.get("text")
            raw = obj.get("labels")
            if not isinstance(text, str) or not isinstance(raw, list):
                raise CorpusError(f"{p}:{line_no}: expected 'text' string and 'labels' array")
            labels = []
            for triple in raw:
                if not (isinstance(triple, list) and len(triple) == 3):
                    raise CorpusError(f"{p}:{line_no}: labels must be [start, end, label] triples")
                labels.append((triple[0], triple[1], triple[2]))
            doc = AnnotatedDocument(text=text, labels=labels)
            validate_annotated(doc, where=f"{p}:{line_no}")
            out.append(doc)
    return out
