"""Synthetic world generation, log mining, and on-disk data formats."""

from vsearch.synth.formats import (
    read_annotations,
    read_documents,
    read_lexicons,
    read_query_log,
    write_annotations,
    write_documents,
    write_lexicons,
    write_query_log,
)
from vsearch.synth.mining import (
    derive_intent_labels,
    filter_generalization_pairs,
    is_strict_subsequence,
    mine_suggestion_pairs,
)
from vsearch.synth.world import (
    ENTITY_TYPES,
    VERTICALS,
    DocumentRecord,
    GeneratorConfig,
    QueryLogEntry,
    TagAnnotation,
    World,
    build_lexicons,
    generate_world,
)

__all__ = [
    "DocumentRecord",
    "ENTITY_TYPES",
    "GeneratorConfig",
    "QueryLogEntry",
    "TagAnnotation",
    "VERTICALS",
    "World",
    "build_lexicons",
    "derive_intent_labels",
    "filter_generalization_pairs",
    "generate_world",
    "is_strict_subsequence",
    "mine_suggestion_pairs",
    "read_annotations",
    "read_documents",
    "read_lexicons",
    "read_query_log",
    "write_annotations",
    "write_documents",
    "write_lexicons",
    "write_query_log",
]
