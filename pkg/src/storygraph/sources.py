"""Per-source search over news articles, registry companies/officers, and web.

Results are never merged across sources: callers get one result set per
source (the tab model). Every source can run against on-disk fixtures for
fully offline operation; live adapters are thin HTTP mappings that degrade
to fixtures when the back-end fails.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx
import tomli

from .documents import SOURCES, CorpusError, Document, document_from_json, matches_all_terms
from .textindex import tokenize


class SourceError(RuntimeError):
    """A source cannot be queried as configured."""


@dataclass
class SourceQuery:
    text: str
    source: str
    max_results: int = 10
    officer_parent: str | None = None  # company doc id; required for live officer queries

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("query text is empty")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.max_results < 1:
            raise ValueError(f"max_results must be >= 1, got {self.max_results}")


@dataclass
class SourceResult:
    source: str
    items: list[Document]
    fetched_at: str
    degraded: bool = False


TabSet = dict[str, SourceResult]


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class FixtureStore:
    """In-memory fixture documents with conjunctive token matching."""

    FILES = {src: f"{src}.jsonl" for src in SOURCES}

    def __init__(self, docs: dict[str, list[Document]], officer_companies: dict[str, str]):
        self.docs = docs
        self.officer_companies = officer_companies

    def search(
        self,
        source: str,
        text: str,
        max_results: int = 10,
        officer_parent: str | None = None,
    ) -> list[Document]:
        terms = [t.text for t in tokenize(text)]
        out = []
        for doc in self.docs[source]:
            if source == "officers" and officer_parent is not None:
                if self.officer_companies.get(doc.id) != officer_parent:
                    continue
            if matches_all_terms(doc, terms):
                out.append(doc)
                if len(out) >= max_results:
                    break
        return out

    def counts(self) -> dict[str, int]:
        return {src: len(items) for src, items in self.docs.items()}


def load_fixtures(fixture_dir) -> FixtureStore:
    """Load articles/companies/officers/web JSONL files from a directory.

    Officer records must carry a ``company_id`` key on top of the corpus
    schema; errors are reported with file and line number.
    """
    root = Path(fixture_dir)
    docs: dict[str, list[Document]] = {}
    officer_companies: dict[str, str] = {}
    for source, filename in FixtureStore.FILES.items():
        path = root / filename
        if not path.is_file():
            raise SourceError(f"missing fixture file: {path}")
        docs[source] = []
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except ValueError as exc:
                    raise CorpusError(f"{path}:{line_no}: invalid JSON ({exc})") from None
                doc = document_from_json(obj, where=f"{path}:{line_no}")
                if doc.source != source:
                    raise CorpusError(
                        f"{path}:{line_no}: record source {doc.source!r} does not match file"
                    )
                if source == "officers":
                    company = obj.get("company_id")
                    if not isinstance(company, str) or not company:
                        raise CorpusError(f"{path}:{line_no}: officer record missing 'company_id'")
                    officer_companies[doc.id] = company
                docs[source].append(doc)
    return FixtureStore(docs, officer_companies)


@dataclass
class SourceConfig:
    mode: str = "fixture"  # "fixture" | "live"
    fixture_dir: str | None = None
    endpoint: str | None = None
    api_key_env: str | None = None
    timeout: float = 5.0


@dataclass
class SourcesConfig:
    per_source: dict[str, SourceConfig] = field(default_factory=dict)

    @classmethod
    def fixtures(cls, fixture_dir) -> "SourcesConfig":
        return cls({src: SourceConfig(mode="fixture", fixture_dir=str(fixture_dir)) for src in SOURCES})

    def validate(self) -> None:
        for src in SOURCES:
            cfg = self.per_source.get(src)
            if cfg is None:
                raise SourceError(f"no configuration for source {src!r}")
            if cfg.mode not in ("fixture", "live"):
                raise SourceError(f"{src}: unknown mode {cfg.mode!r}")
            if cfg.mode == "fixture" and not cfg.fixture_dir:
                raise SourceError(f"{src}: fixture mode needs fixture_dir")
            if cfg.mode == "live" and not cfg.endpoint:
                raise SourceError(f"{src}: live mode needs endpoint")


def load_sources_config(path) -> SourcesConfig:
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    table = data.get("sources", {})
    per_source = {}
    for src in SOURCES:
        sub = table.get(src, {})
        per_source[src] = SourceConfig(
            mode=sub.get("mode", "fixture"),
            fixture_dir=sub.get("fixture_dir"),
            endpoint=sub.get("endpoint"),
            api_key_env=sub.get("api_key_env"),
            timeout=float(sub.get("timeout", 5.0)),
        )
    return SourcesConfig(per_source)


# Live response field mappings, per source:
#   articles:  results[] -> id:id, title:headline, body:summary, url:url, published_at:date
#   companies: items[]   -> id:company_number, title:title, body:snippet+address, url:links.self
#   officers:  items[]   -> id:officer_id, title:name, body:officer_role+appointed_on, url:links.officer
#   web:       items[]   -> id:cacheId|url, title:title, body:snippet, url:link
_LIVE_RESULT_KEYS = {"articles": "results", "companies": "items", "officers": "items", "web": "items"}


def _live_fetch(q: SourceQuery, cfg: SourceConfig) -> list[Document]:
    api_key = None
    if cfg.api_key_env:
        api_key = os.environ.get(cfg.api_key_env)
        if not api_key:
            raise SourceError(f"{q.source}: credentials env {cfg.api_key_env} is not set")
    params = {"q": q.text, "limit": str(q.max_results)}
    if q.source == "officers":
        params["company"] = q.officer_parent or ""
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    resp = httpx.get(cfg.endpoint, params=params, headers=headers, timeout=cfg.timeout)
    resp.raise_for_status()
    payload = resp.json()
    rows = payload.get(_LIVE_RESULT_KEYS[q.source], [])
    docs = []
    for i, row in enumerate(rows[: q.max_results]):
        docs.append(
            Document(
                id=str(row.get("id") or row.get("url") or f"{q.source}-{i}"),
                source=q.source,
                title=str(row.get("title", "")),
                body=str(row.get("body") or row.get("snippet") or ""),
                url=str(row.get("url", "")),
                published_at=row.get("published_at"),
            )
        )
    return docs


class SearchClient:
    """Queries the configured back-ends, caching fixture stores per directory."""

    def __init__(self, config: SourcesConfig):
        config.validate()
        self.config = config
        self._stores: dict[str, FixtureStore] = {}

    def _store(self, fixture_dir: str) -> FixtureStore:
        if fixture_dir not in self._stores:
            self._stores[fixture_dir] = load_fixtures(fixture_dir)
        return self._stores[fixture_dir]

    def search_source(self, q: SourceQuery) -> SourceResult:
        cfg = self.config.per_source[q.source]
        if cfg.mode == "fixture":
            store = self._store(cfg.fixture_dir)
            items = store.search(q.source, q.text, q.max_results, q.officer_parent)
            return SourceResult(q.source, items, _now_iso(), degraded=False)
        if q.source == "officers" and not q.officer_parent:
            raise SourceError("live officer queries require officer_parent")
        try:
            items = _live_fetch(q, cfg)
            return SourceResult(q.source, items, _now_iso(), degraded=False)
        except Exception:
            if cfg.fixture_dir:
                store = self._store(cfg.fixture_dir)
                items = store.search(q.source, q.text, q.max_results, q.officer_parent)
                return SourceResult(q.source, items, _now_iso(), degraded=True)
            raise

    def search_all(self, text: str, max_results: int = 10) -> TabSet:
        """Query all four sources concurrently; a failing source yields an
        empty degraded tab, never a whole-call failure."""
        if not text.strip():
            raise ValueError("query text is empty")

        def one(source: str) -> SourceResult:
            try:
                return self.search_source(SourceQuery(text=text, source=source, max_results=max_results))
            except Exception:
                return SourceResult(source, [], _now_iso(), degraded=True)

        with ThreadPoolExecutor(max_workers=len(SOURCES)) as pool:
            futures = {src: pool.submit(one, src) for src in SOURCES}
        return {src: futures[src].result() for src in SOURCES}


def search_source(q: SourceQuery, config: SourcesConfig) -> SourceResult:
    return SearchClient(config).search_source(q)


def search_all(text: str, config: SourcesConfig, max_results: int = 10) -> TabSet:
    return SearchClient(config).search_all(text, max_results)
