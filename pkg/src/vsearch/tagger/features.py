"""Handcrafted feature templates for the CRF and semi-Markov taggers.

Three families, toggled per model mode: char (capitalization before
lowercasing, digits, prefixes/suffixes, plus structural segment length),
word (token identities in a +/-1 window), lexicon (token-level span flags
for the chain model, whole-segment membership for the segment model).
Extraction is pure; feature strings are interned into ids by the model's
feature vocabulary at training time.
"""

from __future__ import annotations

from vsearch.textprep import Lexicon, lexicon_spans

BOS = "<bos>"
EOS = "<eos>"

CHAR = "char"
WORD = "word"
LEXICON = "lexicon"


def char_token_features(cased: str) -> list[str]:
    lower = cased.lower()
    feats = []
    if cased[:1].isupper():
        feats.append("c:cap")
    if cased.isupper() and len(cased) > 1:
        feats.append("c:allcap")
    if any(ch.isdigit() for ch in cased):
        feats.append("c:digit")
    for n in (1, 2, 3):
        if len(lower) >= n:
            feats.append(f"c:pre:{lower[:n]}")
            feats.append(f"c:suf:{lower[-n:]}")
    return feats


class FeatureExtractor:
    """Builds per-position (chain) and per-segment feature string lists."""

    def __init__(self, lexicons: dict[str, Lexicon], families: frozenset[str]):
        self.lexicons = lexicons
        self.families = families

    def _lexicon_flags(self, tokens: list[str]) -> dict[str, list[str]]:
        """Per-position lexicon features: B/I flags of maximal matches."""
        per_pos: dict[int, list[str]] = {i: [] for i in range(len(tokens))}
        for etype in sorted(self.lexicons):
            for s, e in lexicon_spans(self.lexicons[etype], tokens):
                per_pos[s].append(f"lx:{etype}:B")
                for k in range(s + 1, e):
                    per_pos[k].append(f"lx:{etype}:I")
        return {i: feats for i, feats in per_pos.items()}

    def positions(self, tokens: list[str], cased: list[str] | None = None) -> list[list[str]]:
        """Chain-model features for every position."""
        n = len(tokens)
        cased = cased or tokens
        lex_flags = self._lexicon_flags(tokens) if LEXICON in self.families else {}
        out: list[list[str]] = []
        for i in range(n):
            feats = ["bias"]
            if CHAR in self.families:
                feats.extend(char_token_features(cased[i]))
            if WORD in self.families:
                feats.append(f"w:{tokens[i]}")
                feats.append(f"w-1:{tokens[i - 1] if i > 0 else BOS}")
                feats.append(f"w+1:{tokens[i + 1] if i < n - 1 else EOS}")
            if LEXICON in self.families:
                feats.extend(lex_flags.get(i, ()))
            out.append(feats)
        return out

    def segments(self, tokens: list[str], cased: list[str] | None = None,
                 max_len: int = 4) -> dict[tuple[int, int], list[str]]:
        """Segment-model features for every candidate segment up to max_len."""
        n = len(tokens)
        cased = cased or tokens
        ttok = tuple(tokens)
        out: dict[tuple[int, int], list[str]] = {}
        for i in range(n):
            for j in range(i + 1, min(i + max_len, n) + 1):
                feats = ["bias", f"len:{j - i}"]
                if CHAR in self.families:
                    feats.extend(f"first:{f}" for f in char_token_features(cased[i]))
                    if j - i > 1:
                        feats.extend(f"last:{f}" for f in char_token_features(cased[j - 1]))
                if WORD in self.families:
                    feats.append(f"sw0:{tokens[i]}")
                    feats.append(f"sw1:{tokens[j - 1]}")
                    feats.append(f"sw-1:{tokens[i - 1] if i > 0 else BOS}")
                    feats.append(f"sw+1:{tokens[j] if j < n else EOS}")
                if LEXICON in self.families:
                    for etype in sorted(self.lexicons):
                        if ttok[i:j] in self.lexicons[etype]:
                            feats.append(f"seglx:{etype}")
                out[(i, j)] = feats
        return out
