"""Entity types, BIO label set, and segmentations for query tagging."""

from __future__ import annotations

from dataclasses import dataclass

from vsearch.errors import InputError

ENTITY_TYPES = ("first_name", "last_name", "company", "school", "geo", "title", "skill")
OUTSIDE = "O"


class TagSchema:
    """BIO label set over the 7 entity types (15 labels, O first) and the
    segment-type set used by the semi-Markov model (O plus the 7 types)."""

    def __init__(self, entity_types: tuple[str, ...] = ENTITY_TYPES):
        self.entity_types = entity_types
        self.labels = [OUTSIDE]
        for t in entity_types:
            self.labels.append(f"B-{t}")
            self.labels.append(f"I-{t}")
        self._label_ids = {l: i for i, l in enumerate(self.labels)}
        self.segment_types = [OUTSIDE] + list(entity_types)
        self._type_ids = {t: i for i, t in enumerate(self.segment_types)}

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_types(self) -> int:
        return len(self.segment_types)

    def label_id(self, label: str) -> int:
        if label not in self._label_ids:
            raise InputError(f"unknown label {label!r}")
        return self._label_ids[label]

    def type_id(self, etype: str) -> int:
        if etype not in self._type_ids:
            raise InputError(f"unknown entity type {etype!r}")
        return self._type_ids[etype]


@dataclass(frozen=True)
class TagAnnotation:
    """A tokenized query with its gold BIO labels."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise InputError("tokens and labels must align")


@dataclass(frozen=True)
class Segmentation:
    """Contiguous, non-overlapping typed segments covering [0, length).

    O segments always have length 1; entity segments may span several tokens.
    """

    length: int
    segments: tuple[tuple[int, int, str], ...]

    def __post_init__(self):
        pos = 0
        for start, end, etype in self.segments:
            if start != pos or end <= start:
                raise InputError(f"segments must tile [0, {self.length}) in order")
            if etype == OUTSIDE and end - start != 1:
                raise InputError("O segments must have length 1")
            pos = end
        if pos != self.length:
            raise InputError(f"segments cover [0, {pos}), expected [0, {self.length})")

    def entities(self) -> list[tuple[int, int, str]]:
        return [s for s in self.segments if s[2] != OUTSIDE]


def bio_to_segments(labels: list[str] | tuple[str, ...]) -> Segmentation:
    """Lenient BIO reader: an I-x without an open x span starts a new span."""
    segments: list[tuple[int, int, str]] = []
    open_start: int | None = None
    open_type: str | None = None

    def close(upto: int) -> None:
        nonlocal open_start, open_type
        if open_type is not None:
            segments.append((open_start, upto, open_type))
            open_start = open_type = None

    for i, label in enumerate(labels):
        if label == OUTSIDE:
            close(i)
            segments.append((i, i + 1, OUTSIDE))
        elif label.startswith("B-"):
            close(i)
            open_start, open_type = i, label[2:]
        elif label.startswith("I-"):
            etype = label[2:]
            if open_type != etype:
                close(i)
                open_start, open_type = i, etype
        else:
            raise InputError(f"bad BIO label {label!r}")
    close(len(labels))
    return Segmentation(length=len(labels), segments=tuple(segments))


def segments_to_bio(seg: Segmentation) -> list[str]:
    labels: list[str] = []
    for start, end, etype in seg.segments:
        if etype == OUTSIDE:
            labels.append(OUTSIDE)
        else:
            labels.append(f"B-{etype}")
            labels.extend(f"I-{etype}" for _ in range(start + 1, end))
    return labels
