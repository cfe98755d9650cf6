"""Per-keystroke auto-completion: trie candidates plus pluggable rankers.

Candidate generation unions (a) full historical queries under the typed
prefix and (b) synthetic completions: the partial last word is completed
from the vocabulary table, then frequent multi-token suffix units are
appended. Ranking is frequency, normalized LM, or unnormalized LM; the
index is immutable at serve time.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from vsearch.errors import FormatError, InputError
from vsearch.lm import LanguageModel
from vsearch.textprep import tokenize

RANKERS = ("frequency", "normalized", "unnormalized")


@dataclass(frozen=True)
class ScoredCandidate:
    text: str
    source: str  # "full-query" | "synthetic"
    score: float
    breakdown: dict[str, float] = field(default_factory=dict)


class _TrieNode:
    __slots__ = ("children", "count")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.count = 0


def normalize_prefix(prefix: str) -> str:
    """Lowercase, collapse runs of whitespace; a trailing space survives as
    the signal that the last word is complete."""
    norm = " ".join(prefix.lower().split())
    if prefix and prefix[-1].isspace() and norm:
        norm += " "
    return norm


class CompletionIndex:
    def __init__(self, query_counts: dict[str, int], min_support: int = 3,
                 max_suffix_tokens: int = 3):
        self.min_support = min_support
        self.query_counts = dict(query_counts)
        self._root = _TrieNode()
        word_counts: dict[str, int] = {}
        suffix_counts: dict[str, int] = {}
        for query, count in query_counts.items():
            node = self._root
            for ch in query:
                node = node.children.setdefault(ch, _TrieNode())
            node.count += count
            toks = query.split()
            for t in toks:
                word_counts[t] = word_counts.get(t, 0) + count
            for i in range(1, len(toks)):
                for j in range(i + 1, min(i + max_suffix_tokens, len(toks)) + 1):
                    unit = " ".join(toks[i:j])
                    suffix_counts[unit] = suffix_counts.get(unit, 0) + count
        self.suffix_units = {u: c for u, c in suffix_counts.items() if c >= min_support}
        self._words = sorted(word_counts)
        self._word_counts = word_counts

    @classmethod
    def from_queries(cls, queries: Iterable[str], **kwargs) -> "CompletionIndex":
        counts: dict[str, int] = {}
        for q in queries:
            key = " ".join(tokenize(q))
            if key:
                counts[key] = counts.get(key, 0) + 1
        return cls(counts, **kwargs)

    def full_completions(self, prefix: str) -> list[tuple[str, int]]:
        """Historical queries starting with the (normalized) prefix."""
        node = self._root
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return []
        out: list[tuple[str, int]] = []
        stack = [(node, prefix)]
        while stack:
            cur, text = stack.pop()
            if cur.count:
                out.append((text, cur.count))
            for ch, child in cur.children.items():
                stack.append((child, text + ch))
        out.sort(key=lambda x: (-x[1], x[0]))
        return out

    def word_completions(self, partial: str, limit: int = 10) -> list[tuple[str, int]]:
        if not partial:
            return []
        lo = bisect_left(self._words, partial)
        out = []
        for w in self._words[lo:]:
            if not w.startswith(partial):
                break
            out.append((w, self._word_counts[w]))
        out.sort(key=lambda x: (-x[1], x[0]))
        return out[:limit]

    def top_suffix_units(self, limit: int = 10) -> list[tuple[str, int]]:
        units = sorted(self.suffix_units.items(), key=lambda x: (-x[1], x[0]))
        return units[:limit]

    # -- persistence: sorted query+count file, suffix table file -----------

    def save(self, queries_path: str | Path, suffixes_path: str | Path) -> None:
        with open(queries_path, "w", encoding="utf-8") as f:
            for q in sorted(self.query_counts):
                f.write(f"{q}\t{self.query_counts[q]}\n")
        with open(suffixes_path, "w", encoding="utf-8") as f:
            for u in sorted(self.suffix_units):
                f.write(f"{u}\t{self.suffix_units[u]}\n")

    @classmethod
    def load(cls, queries_path: str | Path, suffixes_path: str | Path,
             min_support: int = 3) -> "CompletionIndex":
        counts = {}
        with open(queries_path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                q, _, c = line.rstrip("\n").rpartition("\t")
                if not q:
                    raise FormatError(f"{queries_path}: bad line {line!r}")
                counts[q] = int(c)
        index = cls(counts, min_support=min_support)
        with open(suffixes_path, encoding="utf-8") as f:
            loaded = {}
            for line in f:
                if not line.strip():
                    continue
                u, _, c = line.rstrip("\n").rpartition("\t")
                loaded[u] = int(c)
        index.suffix_units = loaded
        return index


def gen_candidates(index: CompletionIndex, prefix: str, max_n: int = 10
                   ) -> list[tuple[str, str, int]]:
    """(text, source, frequency) candidates extending the prefix.

    Full historical queries come first (by their logged frequency); synthetic
    candidates (word completion + suffix units) backfill the remaining slots,
    ordered by their own source frequencies. Deduplicated, full-query wins.
    """
    pfx = normalize_prefix(prefix)
    full = [(text, "full-query", count)
            for text, count in index.full_completions(pfx)][:max_n]
    taken = {t for t, _, _ in full}
    out = list(full)

    if len(out) < max_n:
        if pfx.endswith(" ") or not pfx:
            words, partial = pfx.split(), ""
        else:
            parts = pfx.split()
            words, partial = parts[:-1], parts[-1]
        bases: list[tuple[list[str], int]] = []
        if partial:
            for w, wc in index.word_completions(partial):
                bases.append((words + [w], wc))
        elif words:
            bases.append((words, 0))
        synthetic: dict[str, int] = {}
        for base, base_count in bases:
            text = " ".join(base)
            # a bare base equal to the typed prefix completes nothing
            if base_count and text != pfx and text not in taken:
                synthetic[text] = max(synthetic.get(text, 0), base_count)
            for unit, uc in index.top_suffix_units():
                joined = " ".join(base + [unit])
                if joined not in taken:
                    synthetic[joined] = max(synthetic.get(joined, 0), uc)
        backfill = sorted(synthetic.items(), key=lambda x: (-x[1], x[0]))
        out.extend((t, "synthetic", c) for t, c in backfill[:max_n - len(out)])
    return out


def rank_candidates(ranker: str, candidates: list[tuple[str, str, int]],
                    lm: LanguageModel | None = None,
                    blend_frequency: float = 0.0) -> list[ScoredCandidate]:
    """Score and order candidates (descending score, ties lexicographic)."""
    if ranker not in RANKERS:
        raise InputError(f"unknown ranker {ranker!r}")
    if ranker != "frequency" and lm is None:
        raise InputError(f"{ranker} ranker needs a language model")
    scored = []
    for text, source, freq in candidates:
        breakdown = {"frequency": float(freq)}
        if ranker == "frequency":
            score = float(freq)
        else:
            toks = text.split()
            lm_score = (lm.score_normalized(toks) if ranker == "normalized"
                        else lm.score_unnormalized(toks))
            breakdown["lm"] = lm_score
            score = lm_score + blend_frequency * float(freq)
        scored.append(ScoredCandidate(text=text, source=source, score=score,
                                      breakdown=breakdown))
    scored.sort(key=lambda c: (-c.score, c.text))
    return scored


def mrr_at_10(runs: list[tuple[list[str], str]]) -> float:
    """Mean reciprocal rank of the submitted query within each top-10 list."""
    if not runs:
        raise InputError("no impressions")
    total = 0.0
    for ranked, truth in runs:
        for i, text in enumerate(ranked[:10]):
            if text == truth:
                total += 1.0 / (i + 1)
                break
    return total / len(runs)
