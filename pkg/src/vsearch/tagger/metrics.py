"""Entity-level F1 over (span, type) exact matches."""

from __future__ import annotations

from vsearch.errors import InputError
from vsearch.tagger.schema import Segmentation


def entity_f1(gold: list[Segmentation], predicted: list[Segmentation]) -> float:
    """Exact (start, end, type) matching, O segments excluded.

    An entirely entity-free corpus on both sides scores 1.0.
    """
    if len(gold) != len(predicted):
        raise InputError(f"{len(gold)} gold vs {len(predicted)} predicted segmentations")
    n_gold = n_pred = n_correct = 0
    for g, p in zip(gold, predicted):
        if g.length != p.length:
            raise InputError("segmentation lengths differ for aligned query")
        ge = set(g.entities())
        pe = set(p.entities())
        n_gold += len(ge)
        n_pred += len(pe)
        n_correct += len(ge & pe)
    if n_gold == 0 and n_pred == 0:
        return 1.0
    precision = n_correct / n_pred if n_pred else 0.0
    recall = n_correct / n_gold if n_gold else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
