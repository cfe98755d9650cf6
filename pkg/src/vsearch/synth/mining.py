"""Labels and pairs mined from the query log.

Sessions are time-gap based (<= 600 seconds between consecutive queries of
one user) and a reformulation pair must additionally share a token; pairs
whose target is a strict token subsequence of the source are generalization
pairs and get filtered before seq2seq training.
"""

from __future__ import annotations

import hashlib

from vsearch.synth.world import QueryLogEntry
from vsearch.textprep import tokenize

SESSION_GAP_SECONDS = 600


def derive_intent_labels(log: list[QueryLogEntry]) -> list[tuple[str, str]]:
    """One (query, clicked vertical) example per clicked entry."""
    return [(e.query, e.clicked_vertical) for e in log if e.clicked_vertical is not None]


def mine_suggestion_pairs(log: list[QueryLogEntry]) -> list[tuple[str, str]]:
    """Consecutive same-user queries within one session sharing a token.

    Identical consecutive queries are not reformulations and are skipped.
    """
    by_user: dict[str, list[QueryLogEntry]] = {}
    for e in log:
        by_user.setdefault(e.user, []).append(e)
    pairs: list[tuple[str, str]] = []
    for user in sorted(by_user):
        entries = sorted(by_user[user], key=lambda e: e.ts)
        for prev, cur in zip(entries, entries[1:]):
            if cur.ts - prev.ts > SESSION_GAP_SECONDS:
                continue
            if prev.query == cur.query:
                continue
            if set(tokenize(prev.query)) & set(tokenize(cur.query)):
                pairs.append((prev.query, cur.query))
    return pairs


def is_strict_subsequence(target: list[str], source: list[str]) -> bool:
    """True when target is a subsequence of source and not equal to it."""
    if target == source:
        return False
    it = iter(source)
    return all(tok in it for tok in target)


def filter_generalization_pairs(pairs: list[tuple[str, str]]) -> list[tuple[str, str]]:
    """Drop pairs whose target tokens form a strict subsequence of the source."""
    kept = []
    for src, tgt in pairs:
        if not is_strict_subsequence(tokenize(tgt), tokenize(src)):
            kept.append((src, tgt))
    return kept


def split_log_by_user(log: list[QueryLogEntry], test_percent: int = 10
                      ) -> tuple[list[QueryLogEntry], list[QueryLogEntry]]:
    """Deterministic (train, test) split: a user's entire history lands on one
    side, keyed by a stable hash of the user id."""
    train, test = [], []
    for e in log:
        bucket = int.from_bytes(hashlib.sha1(e.user.encode()).digest()[:4], "little") % 100
        (test if bucket < test_percent else train).append(e)
    return train, test
