"""Inverted index with BM25 scoring (k1=1.2, b=0.75).

Documents are indexed over all fields; BM25 runs on concatenated-field term
counts. Postings are sorted by doc id and the index is immutable once built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from vsearch.synth.world import DocumentRecord
from vsearch.textprep import tokenize

K1 = 1.2
B = 0.75


@dataclass(frozen=True)
class Posting:
    doc_id: int
    field: str
    tf: int


class InvertedIndex:
    def __init__(self, docs: list[DocumentRecord]):
        self.docs = {d.doc_id: d for d in docs}
        self.doc_tokens: dict[int, dict[str, list[str]]] = {}
        self.postings: dict[str, list[Posting]] = {}
        self.doc_len: dict[int, int] = {}
        for doc in docs:
            fields = {name: tokenize(text) for name, text in doc.fields.items()}
            self.doc_tokens[doc.doc_id] = fields
            total = 0
            per_field_counts: dict[str, dict[str, int]] = {}
            for fname, toks in fields.items():
                counts: dict[str, int] = {}
                for t in toks:
                    counts[t] = counts.get(t, 0) + 1
                per_field_counts[fname] = counts
                total += len(toks)
            self.doc_len[doc.doc_id] = total
            for fname, counts in per_field_counts.items():
                for t, tf in counts.items():
                    self.postings.setdefault(t, []).append(Posting(doc.doc_id, fname, tf))
        for plist in self.postings.values():
            plist.sort(key=lambda p: (p.doc_id, p.field))
        self.n_docs = len(docs)
        self.avg_len = (sum(self.doc_len.values()) / self.n_docs) if docs else 0.0
        self._df = {t: len({p.doc_id for p in plist})
                    for t, plist in self.postings.items()}
        self._idf = {t: math.log(1.0 + (self.n_docs - d + 0.5) / (d + 0.5))
                     for t, d in self._df.items()}
        self._idf_unseen = math.log(1.0 + (self.n_docs + 0.5) / 0.5)

    def df(self, token: str) -> int:
        return self._df.get(token, 0)

    def idf(self, token: str) -> float:
        return self._idf.get(token, self._idf_unseen)

    def _doc_tf(self, token: str) -> dict[int, int]:
        out: dict[int, int] = {}
        for p in self.postings.get(token, ()):
            out[p.doc_id] = out.get(p.doc_id, 0) + p.tf
        return out

    def bm25_scores(self, query_tokens: list[str]) -> dict[int, float]:
        """BM25 over docs containing at least one query token."""
        scores: dict[int, float] = {}
        for token in query_tokens:
            tfs = self._doc_tf(token)
            if not tfs:
                continue
            idf = self.idf(token)
            for doc_id, tf in tfs.items():
                norm = K1 * (1.0 - B + B * self.doc_len[doc_id] / self.avg_len)
                scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (K1 + 1.0) / (tf + norm)
        return scores

    def retrieve(self, query: str, limit: int = 2000,
                 vertical: str | None = None) -> list[int]:
        """Top `limit` doc ids by BM25, ties broken by ascending doc id."""
        scores = self.bm25_scores(tokenize(query))
        if vertical is not None:
            scores = {d: s for d, s in scores.items() if self.docs[d].vertical == vertical}
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return [doc_id for doc_id, _ in ranked[:limit]]
