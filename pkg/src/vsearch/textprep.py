"""Tokenization, vocabulary construction, and entity lexicons.

Queries are keyword-style, so everything is lowercased; the original casing
is kept alongside for char-level tagger features. All types here are
immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from vsearch.errors import FormatError, InputError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

# Unicode letters and digits; underscore counts as punctuation and is dropped.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_cased(text: str) -> list[str]:
    """Split on whitespace/punctuation boundaries, keeping original case."""
    return _TOKEN_RE.findall(text)


def tokenize(text: str) -> list[str]:
    """Lowercased tokens; punctuation dropped. Empty text gives []."""
    return [t.lower() for t in tokenize_cased(text)]


class Vocabulary:
    """Dense token<->id map. id 0 is PAD, id 1 is UNK; the rest are corpus
    tokens ranked by frequency (ties broken lexicographically)."""

    def __init__(self, tokens: list[str]):
        if tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise InputError("vocabulary must start with PAD, UNK")
        self._id_to_token = list(tokens)
        self._token_to_id = {t: i for i, t in enumerate(tokens)}
        if len(self._token_to_id) != len(tokens):
            raise InputError("duplicate token in vocabulary")

    @classmethod
    def build(cls, corpus: Iterable[list[str]], max_size: int = 100_000) -> "Vocabulary":
        counts: dict[str, int] = {}
        for tokens in corpus:
            for t in tokens:
                counts[t] = counts.get(t, 0) + 1
        if not counts:
            raise InputError("empty corpus")
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        keep = [t for t, _ in ranked[: max(0, max_size - 2)]]
        return cls([PAD_TOKEN, UNK_TOKEN] + keep)

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for i, t in enumerate(self._id_to_token):
                f.write(f"{t}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2 or int(parts[1]) != lineno:
                    raise FormatError(f"{path}:{lineno + 1}: bad vocabulary line")
                tokens.append(parts[0])
        return cls(tokens)


@dataclass(frozen=True)
class Lexicon:
    """Entity-typed phrase set; lookup is exact on lowercase token tuples."""

    entity_type: str
    phrases: frozenset[tuple[str, ...]]
    max_phrase_len: int = field(init=False)

    def __post_init__(self):
        if any(len(p) == 0 for p in self.phrases):
            raise InputError("empty phrase in lexicon")
        object.__setattr__(
            self, "max_phrase_len", max((len(p) for p in self.phrases), default=1)
        )

    @classmethod
    def from_phrases(cls, entity_type: str, phrases: Iterable[str]) -> "Lexicon":
        toks = frozenset(tuple(tokenize(p)) for p in phrases if tokenize(p))
        return cls(entity_type, toks)

    def __contains__(self, tokens: tuple[str, ...]) -> bool:
        return tokens in self.phrases

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for p in sorted(self.phrases):
                f.write(" ".join(p) + "\n")

    @classmethod
    def load(cls, path: str | Path, entity_type: str | None = None) -> "Lexicon":
        name = entity_type or Path(path).stem
        with open(path, encoding="utf-8") as f:
            return cls.from_phrases(name, (line.strip() for line in f if line.strip()))


def lexicon_spans(lex: Lexicon, tokens: list[str]) -> list[tuple[int, int]]:
    """Maximal phrase matches under greedy longest-match, left to right."""
    spans = []
    n = len(tokens)
    ttok = tuple(tokens)
    i = 0
    while i < n:
        hit = 0
        for l in range(min(lex.max_phrase_len, n - i), 0, -1):
            if ttok[i:i + l] in lex.phrases:
                hit = l
                break
        if hit:
            spans.append((i, i + hit))
            i += hit
        else:
            i += 1
    return spans


def lexicon_match(lexicons: Iterable[Lexicon], tokens: list[str]) -> dict[str, list[bool]]:
    """Per-type token coverage flags under greedy longest-match, left to right.

    Each type is matched independently; flags of one matched phrase form a
    contiguous span.
    """
    out: dict[str, list[bool]] = {}
    for lex in lexicons:
        flags = [False] * len(tokens)
        for s, e in lexicon_spans(lex, tokens):
            for k in range(s, e):
                flags[k] = True
        out[lex.entity_type] = flags
    return out


@dataclass(frozen=True)
class TokenSequence:
    """A query string with its tokens and vocabulary ids."""

    raw: str
    tokens: tuple[str, ...]
    cased: tuple[str, ...]
    ids: tuple[int, ...]

    @classmethod
    def from_text(cls, text: str, vocab: Vocabulary) -> "TokenSequence":
        cased = tuple(tokenize_cased(text))
        tokens = tuple(t.lower() for t in cased)
        return cls(raw=text, tokens=tokens, cased=cased, ids=tuple(vocab.encode(list(tokens))))

    def __len__(self) -> int:
        return len(self.tokens)
