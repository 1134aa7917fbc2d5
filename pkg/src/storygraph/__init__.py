"""Session-oriented exploratory search with an evidence-carrying entity graph."""

from .documents import (
    AnnotatedDocument,
    AnnotationSet,
    CorpusError,
    DedupReport,
    Document,
    build_annotation_set,
    dedup,
    export_annotations,
    import_annotations,
    load_corpus,
)
from .entities import (
    ENTITY_LABELS,
    Entity,
    EntityMention,
    ExtractorEval,
    canonicalize,
    decode_mentions,
    evaluate,
    extract,
    label_tokens,
    load_gazetteer,
)
from .graph import ConnectionGraph, build_graph, export_graph, import_graph, merge, neighbors
from .ranking import RankedEntities, rank_entities, score_entity
from .service import AppConfig, UsageMetrics, compute_metrics, create_app, fixture_app_config
from .sources import SourceQuery, SourceResult, SourcesConfig, load_fixtures, search_all, search_source
from .textindex import (
    Bm25Params,
    InvertedIndex,
    Token,
    bm25_query,
    bm25_term,
    build_index,
    tokenize,
)

__version__ = "0.1.0"
