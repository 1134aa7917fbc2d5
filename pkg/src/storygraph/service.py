"""Session orchestration and the HTTP API.

A session runs the full pipeline on creation (search all sources, dedup,
index, extract, rank, build graph) and again on every entity expansion,
where newly retrieved documents are deduplicated against the session corpus
and the resulting graph is merged into the session graph. Every interaction
the UI reports is appended to a durable JSONL event log, from which usage
metrics are computed.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import tomli
from pydantic import BaseModel

from .documents import SOURCES, Document, dedup, dedup_against, document_to_json
from .entities import Gazetteer, canonicalize, extract, load_gazetteer
from .graph import ConnectionGraph, build_graph, export_graph, key_from_id, merge, node_id
from .ranking import RankedEntities, rank_entities
from .sources import SearchClient, SourceResult, SourcesConfig, load_sources_config
from .textindex import Bm25Params, InvertedIndex, build_index, tokenize

TAB_KINDS = SOURCES + ("connections",)
EVENT_KINDS = ("query", "tab_view", "clickthrough", "expand")


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries the stage name for the API error shape."""

    def __init__(self, stage: str, message: str, status: int = 500):
        super().__init__(message)
        self.stage = stage
        self.status = status


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class AppConfig:
    sources: SourcesConfig
    gazetteer: Gazetteer = field(default_factory=dict)
    bm25: Bm25Params = field(default_factory=Bm25Params)
    top_k: int = 15
    dedup_k: int = 5
    dedup_threshold: float = 0.8
    workers: int = 1
    aggregation: str = "sum"
    event_log_path: str = "events.jsonl"
    session_ttl: float = 86400.0
    max_results: int = 10
    extractor: object | None = None
    extractor_fallback: bool = True
    static_dir: str | None = None


def load_app_config(path) -> AppConfig:
    """Read the service + sources TOML config file."""
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    svc = data.get("service", {})
    bm = data.get("bm25", {})
    gaz_path = svc.get("gazetteer")
    cfg = AppConfig(
        sources=load_sources_config(path),
        gazetteer=load_gazetteer(gaz_path) if gaz_path else {},
        bm25=Bm25Params(k1=float(bm.get("k1", 1.2)), b=float(bm.get("b", 0.75))),
        top_k=int(svc.get("top_k", 15)),
        dedup_k=int(svc.get("dedup_k", 5)),
        dedup_threshold=float(svc.get("dedup_threshold", 0.8)),
        workers=int(svc.get("workers", 1)),
        aggregation=svc.get("aggregation", "sum"),
        event_log_path=svc.get("event_log", "events.jsonl"),
        session_ttl=float(svc.get("session_ttl", 86400.0)),
        max_results=int(svc.get("max_results", 10)),
        static_dir=svc.get("static_dir"),
    )
    cfg.sources.validate()
    return cfg


def fixture_app_config(fixture_dir, gazetteer_path=None, event_log_path=None) -> AppConfig:
    """All-fixture configuration rooted at one directory; the conventional
    gazetteer location is ``<fixture_dir>/gazetteer.tsv``."""
    fixture_dir = Path(fixture_dir)
    if gazetteer_path is None:
        default = fixture_dir / "gazetteer.tsv"
        gazetteer_path = default if default.is_file() else None
    return AppConfig(
        sources=SourcesConfig.fixtures(fixture_dir),
        gazetteer=load_gazetteer(gazetteer_path) if gazetteer_path else {},
        event_log_path=str(event_log_path or (Path(fixture_dir) / "events.jsonl")),
    )


@dataclass
class Session:
    id: str
    user: str
    queries: list[tuple[str, str]]  # (text, timestamp)
    corpus: list[Document]
    index: InvertedIndex
    graph: ConnectionGraph
    tabs: dict[str, SourceResult]
    created_at: str
    last_active: float
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class EventLog:
    """Append-only JSONL file; one line per event, atomic per line."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def read_events(self) -> list[dict]:
        if not self.path.is_file():
            return []
        events = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


@dataclass
class UsageMetrics:
    sessions_per_user: float = 0.0
    avg_query_length: float = 0.0
    article_list_views: float = 0.0
    connections_views: float = 0.0
    company_list_views: float = 0.0
    officer_list_views: float = 0.0
    clickthroughs: float = 0.0

    def as_dict(self) -> dict:
        return {
            "sessions_per_user": self.sessions_per_user,
            "avg_query_length": self.avg_query_length,
            "article_list_views": self.article_list_views,
            "connections_views": self.connections_views,
            "company_list_views": self.company_list_views,
            "officer_list_views": self.officer_list_views,
            "clickthroughs": self.clickthroughs,
        }


def validate_event(event: dict, known_sessions: set[str] | None = None) -> None:
    session = event.get("session")
    if not isinstance(session, str) or not session:
        raise ValueError("event is missing 'session'")
    if known_sessions is not None and session not in known_sessions:
        raise ValueError(f"unknown session: {session}")
    kind = event.get("kind")
    if kind not in EVENT_KINDS:
        raise ValueError(f"unknown event kind: {kind!r}")
    payload = event.get("payload") or {}
    if kind == "query" and not isinstance(payload.get("text"), str):
        raise ValueError("query event needs payload.text")
    if kind == "tab_view" and payload.get("tab") not in TAB_KINDS:
        raise ValueError(f"tab_view event needs payload.tab in {TAB_KINDS}")
    if kind == "clickthrough" and not payload.get("doc_id"):
        raise ValueError("clickthrough event needs payload.doc_id")
    if kind == "expand" and not payload.get("entity"):
        raise ValueError("expand event needs payload.entity")


def compute_metrics(events: list[dict], session_users: dict[str, str]) -> UsageMetrics:
    """Aggregate the logged interactions.

    sessions_per_user divides total sessions by distinct users;
    avg_query_length is the mean token count over query events; the
    remaining figures are event totals divided by the session count.
    """
    sessions = len(session_users)
    users = len(set(session_users.values()))
    query_lengths = []
    tab_counts = {tab: 0 for tab in TAB_KINDS}
    clicks = 0
    for event in events:
        kind = event.get("kind")
        payload = event.get("payload") or {}
        if kind == "query":
            query_lengths.append(len(tokenize(payload.get("text", ""))))
        elif kind == "tab_view":
            tab = payload.get("tab")
            if tab in tab_counts:
                tab_counts[tab] += 1
        elif kind == "clickthrough":
            clicks += 1

    def per_session(count: int) -> float:
        return count / sessions if sessions else 0.0

    return UsageMetrics(
        sessions_per_user=sessions / users if users else 0.0,
        avg_query_length=sum(query_lengths) / len(query_lengths) if query_lengths else 0.0,
        article_list_views=per_session(tab_counts["articles"]),
        connections_views=per_session(tab_counts["connections"]),
        company_list_views=per_session(tab_counts["companies"]),
        officer_list_views=per_session(tab_counts["officers"]),
        clickthroughs=per_session(clicks),
    )


def _tab_json(result: SourceResult) -> dict:
    return {
        "source": result.source,
        "items": [document_to_json(d) for d in result.items],
        "fetched_at": result.fetched_at,
        "degraded": result.degraded,
    }


def _entities_json(ranked: RankedEntities) -> list[dict]:
    return [
        {
            "id": node_id(entity.key),
            "display": entity.display,
            "label": entity.label,
            "score": score,
            "docs": sorted(entity.doc_ids),
        }
        for entity, score in ranked.entries
    ]


class SessionService:
    """Holds live sessions and runs the search/index/extract/rank/graph chain."""

    def __init__(self, config: AppConfig):
        self.config = config
        self.client = SearchClient(config.sources)
        self.sessions: dict[str, Session] = {}
        self.session_users: dict[str, str] = {}
        self.events = EventLog(config.event_log_path)
        self._registry_lock = threading.Lock()

    # -- internals ------------------------------------------------------------

    def _stage(self, stage: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage, str(exc)) from exc

    def _pipeline(self, corpus: list[Document], query: str):
        cfg = self.config
        index = self._stage("index", build_index, corpus, cfg.workers)
        mentions = self._stage(
            "extract", extract, corpus, cfg.gazetteer, cfg.extractor, cfg.extractor_fallback
        )
        entities = self._stage("canonicalize", canonicalize, mentions)
        ranked = self._stage(
            "rank", rank_entities, entities, index, cfg.bm25, cfg.top_k, cfg.aggregation
        )
        graph = self._stage("graph", build_graph, ranked, corpus, query)
        return index, ranked, graph

    def _log(self, session_id: str, kind: str, payload: dict) -> dict:
        event = {
            "session": session_id,
            "kind": kind,
            "timestamp": _now_iso(),
            "payload": payload,
        }
        self.events.append(event)
        return event

    def _get_live(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise PipelineError("session", f"unknown session: {session_id}", status=404)
        if time.monotonic() - session.last_active > self.config.session_ttl:
            raise PipelineError("session", f"session expired: {session_id}", status=410)
        return session

    @staticmethod
    def _collect_docs(tabs: dict[str, SourceResult]) -> list[Document]:
        docs = []
        seen: set[str] = set()
        for source in SOURCES:
            for doc in tabs[source].items:
                if doc.id not in seen:
                    seen.add(doc.id)
                    docs.append(doc)
        return docs

    # -- operations -------------------------------------------------------------

    def create_session(self, user: str, query: str) -> dict:
        if not query.strip():
            raise PipelineError("request", "query text is empty", status=400)
        cfg = self.config
        tabs = self._stage("search", self.client.search_all, query, cfg.max_results)
        docs = self._collect_docs(tabs)
        report = self._stage("dedup", dedup, docs, cfg.dedup_k, cfg.dedup_threshold)
        kept = set(report.kept)
        corpus = [d for d in docs if d.id in kept]
        index, ranked, graph = self._pipeline(corpus, query)
        now = _now_iso()
        session = Session(
            id=uuid.uuid4().hex,
            user=user,
            queries=[(query, now)],
            corpus=corpus,
            index=index,
            graph=graph,
            tabs=tabs,
            created_at=now,
            last_active=time.monotonic(),
        )
        with self._registry_lock:
            self.sessions[session.id] = session
            self.session_users[session.id] = user
        self._log(session.id, "query", {"text": query})
        return {
            "session_id": session.id,
            "tabs": {src: _tab_json(tabs[src]) for src in SOURCES},
            "entities": _entities_json(ranked),
            "graph": export_graph(graph),
        }

    def expand(self, session_id: str, entity_id: str) -> dict:
        session = self._get_live(session_id)
        cfg = self.config
        with session.lock:
            try:
                key = key_from_id(entity_id)
            except ValueError as exc:
                raise PipelineError("expand", str(exc), status=400) from None
            node = session.graph.nodes.get(key)
            if node is None:
                raise PipelineError("expand", f"unknown entity: {entity_id}", status=404)
            query = node.display
            tabs = self._stage("search", self.client.search_all, query, cfg.max_results)
            have = {d.id for d in session.corpus}
            incoming = [d for d in self._collect_docs(tabs) if d.id not in have]
            report = self._stage(
                "dedup", dedup_against, incoming, session.corpus, cfg.dedup_k, cfg.dedup_threshold
            )
            kept = set(report.kept)
            session.corpus = session.corpus + [d for d in incoming if d.id in kept]
            index, ranked, delta = self._pipeline(session.corpus, query)
            session.index = index
            session.graph = merge(session.graph, delta)
            session.tabs = tabs
            now = _now_iso()
            session.queries.append((query, now))
            session.last_active = time.monotonic()
        self._log(session_id, "expand", {"entity": entity_id})
        return export_graph(session.graph)

    def log_event(self, session_id: str, kind: str, payload: dict) -> dict:
        event = {"session": session_id, "kind": kind, "payload": payload or {}}
        try:
            validate_event(event, known_sessions=set(self.sessions))
        except ValueError as exc:
            status = 404 if "unknown session" in str(exc) else 400
            raise PipelineError("event", str(exc), status=status) from None
        return self._log(session_id, kind, payload or {})

    def graph_json(self, session_id: str) -> dict:
        return export_graph(self._get_live(session_id).graph)

    def tab_json(self, session_id: str, source: str) -> dict:
        if source not in SOURCES:
            raise PipelineError("tab", f"unknown source: {source}", status=404)
        return _tab_json(self._get_live(session_id).tabs[source])

    def doc_json(self, session_id: str, doc_id: str) -> dict:
        session = self._get_live(session_id)
        for doc in session.corpus:
            if doc.id == doc_id:
                return document_to_json(doc)
        for source in SOURCES:
            for doc in session.tabs[source].items:
                if doc.id == doc_id:
                    return document_to_json(doc)
        raise PipelineError("doc", f"unknown document: {doc_id}", status=404)

    def metrics(self) -> UsageMetrics:
        return compute_metrics(self.events.read_events(), dict(self.session_users))


class SessionRequest(BaseModel):
    user: str
    query: str


class ExpandRequest(BaseModel):
    entity: str


class EventRequest(BaseModel):
    kind: str
    payload: dict = {}


def create_app(config: AppConfig):
    """Build the FastAPI application over a :class:`SessionService`."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    service = SessionService(config)
    app = FastAPI(title="storygraph")
    app.state.service = service

    @app.exception_handler(PipelineError)
    async def pipeline_error(_request: Request, exc: PipelineError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"stage": exc.stage, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"stage": "request", "message": str(exc)}},
        )

    @app.post("/api/session")
    def post_session(req: SessionRequest):
        return service.create_session(req.user, req.query)

    @app.get("/api/session/{session_id}/graph")
    def get_graph(session_id: str):
        return service.graph_json(session_id)

    @app.get("/api/session/{session_id}/tab/{source}")
    def get_tab(session_id: str, source: str):
        return service.tab_json(session_id, source)

    @app.post("/api/session/{session_id}/expand")
    def post_expand(session_id: str, req: ExpandRequest):
        return service.expand(session_id, req.entity)

    @app.post("/api/session/{session_id}/event")
    def post_event(session_id: str, req: EventRequest):
        service.log_event(session_id, req.kind, req.payload)
        return {"ok": True}

    @app.get("/api/metrics")
    def get_metrics():
        return service.metrics().as_dict()

    @app.get("/api/doc/{session_id}/{doc_id}")
    def get_doc(session_id: str, doc_id: str):
        return service.doc_json(session_id, doc_id)

    if config.static_dir and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app
