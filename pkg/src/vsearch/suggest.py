"""Frequency-pair baseline for related-query suggestion."""

from __future__ import annotations

from pathlib import Path

from vsearch.errors import FormatError
from vsearch.textprep import tokenize


def _normalize(query: str) -> str:
    return " ".join(tokenize(query))


class PairTable:
    """source query -> (target, count) suggestions, counted from mined pairs."""

    def __init__(self, counts: dict[tuple[str, str], int]):
        self._table: dict[str, list[tuple[str, int]]] = {}
        for (src, tgt), count in counts.items():
            self._table.setdefault(src, []).append((tgt, count))
        for src in self._table:
            self._table[src].sort(key=lambda x: (-x[1], x[0]))

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, str]]) -> "PairTable":
        counts: dict[tuple[str, str], int] = {}
        for src, tgt in pairs:
            key = (_normalize(src), _normalize(tgt))
            counts[key] = counts.get(key, 0) + 1
        return cls(counts)

    def __len__(self) -> int:
        return len(self._table)

    def suggest(self, query: str, k: int = 10) -> tuple[list[str], bool]:
        """Top-k targets by count (ties lexicographic) and a coverage flag;
        unseen queries give ([], False)."""
        targets = self._table.get(_normalize(query))
        if not targets:
            return [], False
        return [t for t, _ in targets[:k]], True

    def coverage(self, queries: list[str]) -> float:
        if not queries:
            return 0.0
        hits = sum(1 for q in queries if _normalize(q) in self._table)
        return hits / len(queries)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for src in sorted(self._table):
                for tgt, count in self._table[src]:
                    f.write(f"{src}\t{tgt}\t{count}\n")

    @classmethod
    def load(cls, path: str | Path) -> "PairTable":
        counts: dict[tuple[str, str], int] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 3:
                    raise FormatError(f"{path}:{lineno}: expected 3 columns")
                counts[(cols[0], cols[1])] = int(cols[2])
        return cls(counts)
