"""Entity connection graph: co-occurrence edges with document evidence.

Nodes are ranked entities; an edge exists between two entities whenever
they share at least one document, and the edge carries the full list of
shared documents as its evidence. Graphs are values: merging two graphs
produces a new one and never mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .documents import Document
from .entities import ENTITY_LABELS
from .ranking import RankedEntities

NodeKey = tuple[str, str]
EdgeKey = tuple[NodeKey, NodeKey]

# Human-readable connection hints by evidence source kind.
SOURCE_HINTS = {
    "articles": "news story",
    "companies": "company record",
    "officers": "officer record",
    "web": "web result",
    "fixture": "document",
}


@dataclass
class GraphNode:
    key: NodeKey
    display: str
    label: str
    score: float
    doc_ids: set[str]
    origin_queries: set[str]


@dataclass
class Evidence:
    doc: str
    src: str
    url: str
    title: str


@dataclass
class GraphEdge:
    endpoints: EdgeKey  # ordered pair, endpoints[0] < endpoints[1]
    weight: int
    evidence: list[Evidence]  # sorted by doc id
    hint: str


@dataclass
class ConnectionGraph:
    nodes: dict[NodeKey, GraphNode] = field(default_factory=dict)
    edges: dict[EdgeKey, GraphEdge] = field(default_factory=dict)
    generation: int = 0


def node_id(key: NodeKey) -> str:
    return f"{key[0]}|{key[1]}"


def key_from_id(ident: str) -> NodeKey:
    surface, sep, label = ident.rpartition("|")
    if not sep or label not in ENTITY_LABELS:
        raise ValueError(f"not a node id: {ident!r}")
    return (surface, label)


def _hint(evidence: list[Evidence]) -> str:
    kinds = sorted({SOURCE_HINTS.get(e.src, e.src) for e in evidence})
    return ", ".join(kinds)


def build_graph(ranked: RankedEntities, docs: list[Document], query: str) -> ConnectionGraph:
    """One node per ranked entity, one edge per document-sharing pair."""
    by_id = {d.id: d for d in docs}
    nodes: dict[NodeKey, GraphNode] = {}
    for entity, score in ranked.entries:
        missing = entity.doc_ids - by_id.keys()
        if missing:
            raise ValueError(f"entity {node_id(entity.key)} references unknown docs: {sorted(missing)}")
        nodes[entity.key] = GraphNode(
            key=entity.key,
            display=entity.display,
            label=entity.label,
            score=score,
            doc_ids=set(entity.doc_ids),
            origin_queries={query},
        )
    edges: dict[EdgeKey, GraphEdge] = {}
    keys = sorted(nodes)
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            shared = sorted(nodes[a].doc_ids & nodes[b].doc_ids)
            if not shared:
                continue
            evidence = [
                Evidence(doc=d, src=by_id[d].source, url=by_id[d].url, title=by_id[d].title)
                for d in shared
            ]
            edges[(a, b)] = GraphEdge(
                endpoints=(a, b),
                weight=len(shared),
                evidence=evidence,
                hint=_hint(evidence),
            )
    return ConnectionGraph(nodes=nodes, edges=edges, generation=0)


def merge(base: ConnectionGraph, delta: ConnectionGraph) -> ConnectionGraph:
    """Union of nodes and edges; evidence is de-duplicated by doc id and
    weights recomputed. Merging a graph with itself changes no node or
    edge set; the generation counter always advances."""
    nodes: dict[NodeKey, GraphNode] = {}
    for key, node in base.nodes.items():
        nodes[key] = GraphNode(
            key=key,
            display=node.display,
            label=node.label,
            score=node.score,
            doc_ids=set(node.doc_ids),
            origin_queries=set(node.origin_queries),
        )
    for key, node in delta.nodes.items():
        if key in nodes:
            merged = nodes[key]
            merged.doc_ids |= node.doc_ids
            merged.origin_queries |= node.origin_queries
            merged.score = max(merged.score, node.score)
        else:
            nodes[key] = GraphNode(
                key=key,
                display=node.display,
                label=node.label,
                score=node.score,
                doc_ids=set(node.doc_ids),
                origin_queries=set(node.origin_queries),
            )
    edges: dict[EdgeKey, GraphEdge] = {}
    for source in (base, delta):
        for pair, edge in source.edges.items():
            if pair not in edges:
                edges[pair] = GraphEdge(
                    endpoints=pair,
                    weight=edge.weight,
                    evidence=list(edge.evidence),
                    hint=edge.hint,
                )
                continue
            merged_edge = edges[pair]
            have = {e.doc for e in merged_edge.evidence}
            extra = [e for e in edge.evidence if e.doc not in have]
            if extra:
                merged_edge.evidence = sorted(
                    merged_edge.evidence + extra, key=lambda e: e.doc
                )
                merged_edge.weight = len(merged_edge.evidence)
                merged_edge.hint = _hint(merged_edge.evidence)
    return ConnectionGraph(nodes=nodes, edges=edges, generation=base.generation + 1)


def neighbors(graph: ConnectionGraph, key: NodeKey) -> list[tuple[GraphNode, GraphEdge]]:
    """Adjacent nodes with their edges, heaviest edge first, key as tie-break."""
    if key not in graph.nodes:
        raise KeyError(f"unknown node: {node_id(key)}")
    out = []
    for (a, b), edge in graph.edges.items():
        if a == key:
            out.append((graph.nodes[b], edge))
        elif b == key:
            out.append((graph.nodes[a], edge))
    out.sort(key=lambda item: (-item[1].weight, item[0].key))
    return out


def export_graph(graph: ConnectionGraph) -> dict:
    """Deterministic node-link form: nodes sorted by key, links by endpoint pair."""
    nodes = [
        {
            "id": node_id(key),
            "display": node.display,
            "label": node.label,
            "score": node.score,
            "docs": sorted(node.doc_ids),
            "queries": sorted(node.origin_queries),
        }
        for key, node in sorted(graph.nodes.items())
    ]
    links = [
        {
            "source": node_id(pair[0]),
            "target": node_id(pair[1]),
            "weight": edge.weight,
            "evidence": [
                {"doc": e.doc, "src": e.src, "url": e.url, "title": e.title}
                for e in edge.evidence
            ],
            "hint": edge.hint,
        }
        for pair, edge in sorted(graph.edges.items())
    ]
    return {"nodes": nodes, "links": links}


def import_graph(payload: dict) -> ConnectionGraph:
    """Inverse of :func:`export_graph`; the generation counter restarts at 0."""
    nodes: dict[NodeKey, GraphNode] = {}
    for n in payload.get("nodes", []):
        key = key_from_id(n["id"])
        nodes[key] = GraphNode(
            key=key,
            display=n["display"],
            label=n["label"],
            score=n["score"],
            doc_ids=set(n["docs"]),
            origin_queries=set(n["queries"]),
        )
    edges: dict[EdgeKey, GraphEdge] = {}
    for link in payload.get("links", []):
        a, b = key_from_id(link["source"]), key_from_id(link["target"])
        if a not in nodes or b not in nodes:
            raise ValueError(f"link references missing node: {link['source']}→{link['target']}")
        evidence = [
            Evidence(doc=e["doc"], src=e["src"], url=e["url"], title=e["title"])
            for e in link["evidence"]
        ]
        edges[(a, b)] = GraphEdge(
            endpoints=(a, b),
            weight=link["weight"],
            evidence=evidence,
            hint=link["hint"],
        )
    return ConnectionGraph(nodes=nodes, edges=edges, generation=0)
