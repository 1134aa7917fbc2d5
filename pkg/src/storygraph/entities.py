"""Token-level entity labeling, span decoding, canonicalization and evaluation.

Labels are the four-class set PER/ORG/LOC/MISC over a B/I/O tagging scheme.
The built-in extractor is deterministic: a longest-match gazetteer pass
followed by a capitalization heuristic. A remote model can be plugged in
over HTTP or a stdio pipe and is validated (and repaired) to the same
contract, with the built-in extractor as optional fallback.
"""

from __future__ import annotations

import json
import re
import selectors
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .documents import AnnotatedDocument, Document
from .textindex import Token, tokenize

ENTITY_LABELS = ("PER", "ORG", "LOC", "MISC")
O_TAG = "O"
VALID_TAGS = frozenset({O_TAG} | {f"{p}-{lb}" for p in "BI" for lb in ENTITY_LABELS})

Gazetteer = dict[tuple[str, ...], str]

_SENTENCE_BREAK_RE = re.compile(r"[.!?]\s")


class ExtractorError(RuntimeError):
    """External extractor failed or violated the tag protocol."""


@dataclass(frozen=True)
class EntityMention:
    surface: str
    label: str
    doc_id: str
    token_span: tuple[int, int]  # [start, end) token ordinals
    char_span: tuple[int, int]  # [start, end) code-point offsets


@dataclass
class Entity:
    key: tuple[str, str]  # (casefolded surface, label)
    display: str
    label: str
    mentions: list[EntityMention]
    doc_ids: set[str]
    score: float = 0.0


def load_gazetteer(path) -> Gazetteer:
    """Read a TSV of ``phrase<TAB>label``; phrase tokens are space-separated
    and already lowercased."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"gazetteer file not found: {p}")
    gaz: Gazetteer = {}
    with p.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{p}:{line_no}: expected 'phrase<TAB>label'")
            phrase, label = parts
            if label not in ENTITY_LABELS:
                raise ValueError(f"{p}:{line_no}: unknown label {label!r}")
            toks = tuple(phrase.split())
            if not toks:
                raise ValueError(f"{p}:{line_no}: empty phrase")
            gaz[toks] = label
    return gaz


def _check_alignment(doc: Document, tokens: list[Token]) -> None:
    for i, t in enumerate(tokens):
        if t.position != i or doc.body[t.char_start : t.char_end].lower() != t.text:
            raise ValueError(f"tokens do not align with document {doc.id}")


def _sentence_initial_flags(body: str, tokens: list[Token]) -> list[bool]:
    flags = []
    prev_end = None
    for t in tokens:
        if prev_end is None:
            flags.append(True)
        else:
            flags.append(_SENTENCE_BREAK_RE.search(body[prev_end : t.char_start]) is not None)
        prev_end = t.char_end
    return flags


def label_tokens(doc: Document, tokens: list[Token], gazetteer: Gazetteer) -> list[str]:
    """Assign one B/I/O tag per token.

    Pass 1 greedily matches the longest gazetteer phrase at each position.
    Pass 2 tags the remaining runs of capitalized tokens as MISC; a run
    starting at a sentence-initial token is kept only when it spans at
    least two tokens, which keeps multi-word names at sentence starts
    while dropping a lone capitalized sentence opener.
    """
    _check_alignment(doc, tokens)
    n = len(tokens)
    tags = [O_TAG] * n
    if n == 0:
        return tags

    texts = [t.text for t in tokens]
    max_len = max((len(p) for p in gazetteer), default=0)
    i = 0
    while i < n:
        matched = 0
        for length in range(min(max_len, n - i), 0, -1):
            label = gazetteer.get(tuple(texts[i : i + length]))
            if label is not None:
                tags[i] = f"B-{label}"
                for j in range(i + 1, i + length):
                    tags[j] = f"I-{label}"
                matched = length
                break
        i += matched if matched else 1

    capitalized = [doc.body[t.char_start].isupper() for t in tokens]
    sentence_initial = _sentence_initial_flags(doc.body, tokens)
    i = 0
    while i < n:
        if tags[i] != O_TAG or not capitalized[i]:
            i += 1
            continue
        j = i + 1
        while j < n and tags[j] == O_TAG and capitalized[j] and not sentence_initial[j]:
            j += 1
        if not (sentence_initial[i] and j - i == 1):
            tags[i] = "B-MISC"
            for m in range(i + 1, j):
                tags[m] = "I-MISC"
        i = j
    return tags


def is_bio_valid(tags: list[str]) -> bool:
    prev_label = None
    for tag in tags:
        if tag not in VALID_TAGS:
            return False
        if tag.startswith("I-") and tag[2:] != prev_label:
            return False
        prev_label = tag[2:] if tag != O_TAG else None
    return True


def repair_bio(tags: list[str]) -> list[str]:
    """Promote any I- tag without a same-label predecessor to B-."""
    out = []
    prev_label = None
    for tag in tags:
        if tag not in VALID_TAGS:
            raise ValueError(f"unknown tag {tag!r}")
        if tag.startswith("I-") and tag[2:] != prev_label:
            tag = "B-" + tag[2:]
        out.append(tag)
        prev_label = tag[2:] if tag != O_TAG else None
    return out


def decode_mentions(tags: list[str], tokens: list[Token], doc: Document) -> list[EntityMention]:
    """One mention per maximal B/I run; surfaces sliced from the original text."""
    if len(tags) != len(tokens):
        raise ValueError(f"{len(tags)} tags for {len(tokens)} tokens in document {doc.id}")
    tags = repair_bio(tags)
    mentions: list[EntityMention] = []
    i = 0
    n = len(tags)
    while i < n:
        tag = tags[i]
        if not tag.startswith("B-"):
            i += 1
            continue
        label = tag[2:]
        j = i + 1
        while j < n and tags[j] == f"I-{label}":
            j += 1
        start, end = tokens[i].char_start, tokens[j - 1].char_end
        mentions.append(
            EntityMention(
                surface=doc.body[start:end],
                label=label,
                doc_id=doc.id,
                token_span=(i, j),
                char_span=(start, end),
            )
        )
        i = j
    return mentions


def mentions_to_tags(mentions: list[EntityMention], n_tokens: int) -> list[str]:
    """Inverse of decoding: rebuild the tag sequence from token spans."""
    tags = [O_TAG] * n_tokens
    for m in mentions:
        start, end = m.token_span
        if not (0 <= start < end <= n_tokens):
            raise ValueError(f"mention span {m.token_span} outside 0..{n_tokens}")
        if any(tags[i] != O_TAG for i in range(start, end)):
            raise ValueError("overlapping mentions")
        tags[start] = f"B-{m.label}"
        for i in range(start + 1, end):
            tags[i] = f"I-{m.label}"
    return tags


def canonicalize(mentions: list[EntityMention]) -> list[Entity]:
    """Group mentions by (casefolded surface, label); display is the most
    frequent original-case surface, ties broken by first occurrence."""
    groups: dict[tuple[str, str], list[EntityMention]] = {}
    for m in mentions:
        groups.setdefault((m.surface.casefold(), m.label), []).append(m)
    entities = []
    for key, ms in groups.items():
        counts: dict[str, int] = {}
        first_seen: dict[str, int] = {}
        for idx, m in enumerate(ms):
            counts[m.surface] = counts.get(m.surface, 0) + 1
            first_seen.setdefault(m.surface, idx)
        display = min(counts, key=lambda s: (-counts[s], first_seen[s]))
        entities.append(
            Entity(
                key=key,
                display=display,
                label=key[1],
                mentions=list(ms),
                doc_ids={m.doc_id for m in ms},
            )
        )
    return sorted(entities, key=lambda e: e.key)


# --- evaluation ---------------------------------------------------------------

@dataclass
class ExtractorEval:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_label: dict[str, "ExtractorEval"] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "ExtractorEval":
        precision = tp / (tp + fp) if tp + fp else 1.0
        recall = tp / (tp + fn) if tp + fn else 1.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


def evaluate(gold: list[AnnotatedDocument], predicted: list[list[EntityMention]]) -> ExtractorEval:
    """Exact-span, exact-label scoring of predictions against gold spans.

    ``predicted[i]`` holds the mentions for ``gold[i]``.
    """
    if len(gold) != len(predicted):
        raise ValueError(
            f"gold and predictions cover different document sets "
            f"({len(gold)} vs {len(predicted)})"
        )
    tp = fp = fn = 0
    by_label: dict[str, list[int]] = {lb: [0, 0, 0] for lb in ENTITY_LABELS}
    for doc, mentions in zip(gold, predicted):
        doc_ids = {m.doc_id for m in mentions}
        if len(doc_ids) > 1:
            raise ValueError(f"document id mismatch in predictions: {sorted(doc_ids)}")
        gold_spans = {(s, e, lb) for s, e, lb in doc.labels}
        pred_spans = {(m.char_span[0], m.char_span[1], m.label) for m in mentions}
        tp += len(gold_spans & pred_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
        for lb in ENTITY_LABELS:
            g = {s for s in gold_spans if s[2] == lb}
            p = {s for s in pred_spans if s[2] == lb}
            by_label[lb][0] += len(g & p)
            by_label[lb][1] += len(p - g)
            by_label[lb][2] += len(g - p)
    result = ExtractorEval.from_counts(tp, fp, fn)
    result.per_label = {
        lb: ExtractorEval.from_counts(*counts) for lb, counts in by_label.items()
    }
    return result


# --- external extractor wire protocol ------------------------------------------

class HttpExtractor:
    """POST {"doc_id", "tokens"} to ``<base>/extract``, expect {"tags": [...]}."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def extract(self, doc_id: str, token_texts: list[str]) -> list[str]:
        resp = httpx.post(
            f"{self.base_url}/extract",
            json={"doc_id": doc_id, "tokens": token_texts},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        data = resp.json()
        tags = data.get("tags") if isinstance(data, dict) else None
        if not isinstance(tags, list):
            raise ExtractorError("response missing 'tags' array")
        return tags


class StdioExtractor:
    """Same JSON objects as the HTTP protocol, one per line over a pipe."""

    def __init__(self, argv: list[str], timeout: float = 10.0):
        self.timeout = timeout
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def extract(self, doc_id: str, token_texts: list[str]) -> list[str]:
        if self._proc.poll() is not None:
            raise ExtractorError("extractor process has exited")
        request = json.dumps({"doc_id": doc_id, "tokens": token_texts})
        self._proc.stdin.write(request + "\n")
        self._proc.stdin.flush()
        with selectors.DefaultSelector() as sel:
            sel.register(self._proc.stdout, selectors.EVENT_READ)
            if not sel.select(timeout=self.timeout):
                raise ExtractorError(f"no response within {self.timeout}s")
        line = self._proc.stdout.readline()
        if not line:
            raise ExtractorError("extractor closed the pipe")
        data = json.loads(line)
        tags = data.get("tags") if isinstance(data, dict) else None
        if not isinstance(tags, list):
            raise ExtractorError("response missing 'tags' array")
        return tags

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)


def external_extract(
    doc: Document,
    tokens: list[Token],
    extractor,
    gazetteer: Gazetteer | None = None,
    fallback: bool = True,
) -> list[str]:
    """Tag tokens via an external extractor, validating length and tag set
    and repairing B/I continuity; fall back to the built-in labeler on failure."""
    try:
        tags = extractor.extract(doc.id, [t.text for t in tokens])
        if len(tags) != len(tokens):
            raise ExtractorError(
                f"length mismatch: {len(tags)} tags for {len(tokens)} tokens"
            )
        return repair_bio(tags)
    except Exception:
        if not fallback:
            raise
        return label_tokens(doc, tokens, gazetteer or {})


def extract(
    docs: list[Document],
    gazetteer: Gazetteer,
    extractor=None,
    fallback: bool = True,
) -> list[EntityMention]:
    """Label and decode every document; mentions come back in document order."""
    mentions: list[EntityMention] = []
    for doc in docs:
        tokens = tokenize(doc.body)
        if extractor is None:
            tags = label_tokens(doc, tokens, gazetteer)
        else:
            tags = external_extract(doc, tokens, extractor, gazetteer, fallback)
        mentions.extend(decode_mentions(tags, tokens, doc))
    return mentions
