"""Query named-entity tagging: CRF, semi-Markov CRF, and LSTM variants."""

from vsearch.tagger.metrics import entity_f1
from vsearch.tagger.model import MODES, TaggerConfig, TaggerModel, train_tagger
from vsearch.tagger.schema import (
    ENTITY_TYPES,
    OUTSIDE,
    Segmentation,
    TagAnnotation,
    TagSchema,
    bio_to_segments,
    segments_to_bio,
)

__all__ = [
    "ENTITY_TYPES",
    "MODES",
    "OUTSIDE",
    "Segmentation",
    "TagAnnotation",
    "TagSchema",
    "TaggerConfig",
    "TaggerModel",
    "bio_to_segments",
    "entity_f1",
    "segments_to_bio",
    "train_tagger",
]
