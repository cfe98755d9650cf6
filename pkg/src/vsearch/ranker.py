"""Document ranking: CNN encoders over query and document fields, cosine
similarity features joined with handcrafted features through a hidden layer,
trained with a pairwise logistic learning-to-rank loss.

Deployment strategies live here too: full decode (encode every candidate at
query time), pre-computed embedding store (f32, hash-tied to its model
checkpoint), and two-pass ranking (linear handcrafted-feature model scores
everything, the deep model rescores the top K).
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vsearch.errors import FormatError, InputError, MissingDocumentError, StaleStoreError
from vsearch.nn import (
    Adam,
    conv_maxpool_backward,
    conv_maxpool_batch,
    conv_maxpool_forward,
    glorot_uniform,
    load_checkpoint,
    params_hash,
    save_checkpoint,
)
from vsearch.retrieval import B, K1, InvertedIndex
from vsearch.synth.world import QueryLogEntry
from vsearch.textprep import Vocabulary, tokenize

RANK_FIELDS = ("name", "title", "company", "skills", "school", "geo",
               "industry", "topic", "body")
# one fixed encode length for queries and every field: padding is a property
# of the text, never of the batch, so batched, single-document and query-side
# encodes all live in the same space (identical text -> identical vector)
ENCODE_TOKENS = 8
N_HANDCRAFTED = 2 * len(RANK_FIELDS) + 3


@dataclass(frozen=True)
class RankerConfig:
    embed_dim: int = 64
    n_filters: int = 128
    filter_width: int = 3
    hidden_dim: int = 64
    epochs: int = 4
    lr: float = 0.002
    batch_size: int = 4
    seed: int = 23


@dataclass
class RankedList:
    query_id: str
    doc_ids: list[int]
    scores: list[float]
    strategy: str  # full | precomputed | two-pass


def click_counts(log: list[QueryLogEntry]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for e in log:
        if e.clicked_doc is not None:
            counts[e.clicked_doc] = counts.get(e.clicked_doc, 0) + 1
    return counts


class RankFeatureContext:
    """Handcrafted per-(query, doc) features, identical for the light
    first-pass model and the deep model's handcrafted input."""

    def __init__(self, index: InvertedIndex, clicks: dict[int, int]):
        self.index = index
        self.clicks = clicks
        self._field_tf: dict[int, dict[str, dict[str, int]]] = {}
        self._field_norm: dict[int, dict[str, float]] = {}
        self._doc_tf: dict[int, dict[str, int]] = {}
        for doc_id, fields in index.doc_tokens.items():
            per_field: dict[str, dict[str, int]] = {}
            norms: dict[str, float] = {}
            total: dict[str, int] = {}
            for fname, toks in fields.items():
                tf: dict[str, int] = {}
                for t in toks:
                    tf[t] = tf.get(t, 0) + 1
                    total[t] = total.get(t, 0) + 1
                per_field[fname] = tf
                norms[fname] = math.sqrt(sum((c * index.idf(t)) ** 2 for t, c in tf.items()))
            self._field_tf[doc_id] = per_field
            self._field_norm[doc_id] = norms
            self._doc_tf[doc_id] = total

    def _bm25(self, q_tokens: list[str], doc_id: int) -> float:
        tf = self._doc_tf[doc_id]
        norm = K1 * (1.0 - B + B * self.index.doc_len[doc_id] / self.index.avg_len)
        score = 0.0
        for t in q_tokens:
            f = tf.get(t, 0)
            if f:
                score += self.index.idf(t) * f * (K1 + 1.0) / (f + norm)
        return score

    def _query_side(self, q_tokens: list[str]):
        q_counts: dict[str, int] = {}
        for t in q_tokens:
            q_counts[t] = q_counts.get(t, 0) + 1
        idf2 = {t: self.index.idf(t) ** 2 for t in q_counts}
        q_norm = math.sqrt(sum((c ** 2) * idf2[t] for t, c in q_counts.items()))
        return q_counts, idf2, q_norm

    def _features_one(self, q_tokens, q_counts, idf2, q_norm, doc_id) -> np.ndarray:
        if doc_id not in self._field_tf:
            raise MissingDocumentError(f"doc {doc_id} not in feature context")
        cos = np.zeros(len(RANK_FIELDS))
        exact = np.zeros(len(RANK_FIELDS))
        per_field = self._field_tf[doc_id]
        norms = self._field_norm[doc_id]
        n_uniq = len(q_counts)
        for i, fname in enumerate(RANK_FIELDS):
            tf = per_field.get(fname)
            if not tf:
                continue
            dot = 0.0
            hits = 0
            for t, qc in q_counts.items():
                f = tf.get(t)
                if f:
                    dot += qc * f * idf2[t]
                    hits += 1
            denom = q_norm * norms[fname]
            cos[i] = dot / denom if denom > 1e-12 else 0.0
            if n_uniq:
                exact[i] = hits / n_uniq
        extra = np.array([
            self._bm25(q_tokens, doc_id),
            math.log1p(self.clicks.get(doc_id, 0)),
            float(len(q_tokens)),
        ])
        return np.concatenate([cos, exact, extra])

    def features(self, q_tokens: list[str], doc_id: int) -> np.ndarray:
        q_counts, idf2, q_norm = self._query_side(q_tokens)
        return self._features_one(q_tokens, q_counts, idf2, q_norm, doc_id)

    def features_batch(self, q_tokens: list[str], doc_ids: list[int]) -> np.ndarray:
        """(N, N_HANDCRAFTED): one query-side pass shared across documents."""
        q_counts, idf2, q_norm = self._query_side(q_tokens)
        return np.stack([self._features_one(q_tokens, q_counts, idf2, q_norm, d)
                         for d in doc_ids])


def _pair_loss(margin: float) -> tuple[float, float]:
    """Stable (softplus(-margin), dloss/ds_positive) for one logistic pair."""
    loss = max(-margin, 0.0) + math.log1p(math.exp(-abs(margin)))
    if margin >= 0:
        g = -math.exp(-margin) / (1.0 + math.exp(-margin))
    else:
        g = -1.0 / (1.0 + math.exp(margin))
    return loss, g


def _cosine_forward(u: np.ndarray, v: np.ndarray):
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < 1e-12 or nv < 1e-12:
        return 0.0, None
    c = float(u @ v / (nu * nv))
    return c, (u, v, nu, nv, c)


def _cosine_backward(dc: float, cache):
    if cache is None:
        return None, None
    u, v, nu, nv, c = cache
    du = dc * (v / (nu * nv) - c * u / (nu * nu))
    dv = dc * (u / (nu * nv) - c * v / (nv * nv))
    return du, dv


class RankerModel:
    """Shared embedding + shared CNN for query and document text; per-field
    projections applied to both sides so identical text always lands on the
    same vector (cosine 1)."""

    def __init__(self, vocab: Vocabulary, cfg: RankerConfig,
                 rng: np.random.Generator | None = None):
        self.vocab = vocab
        self.cfg = cfg
        rng = rng or np.random.default_rng(cfg.seed)
        v, d, nf = len(vocab), cfg.embed_dim, cfg.n_filters
        wdim = cfg.filter_width * d
        self.p: dict[str, np.ndarray] = {
            "emb": glorot_uniform(rng, v, d, (v, d)),
            "conv.W": glorot_uniform(rng, wdim, nf, (wdim, nf)),
            "conv.b": np.zeros(nf),
            "hidden.W": glorot_uniform(rng, len(RANK_FIELDS) + N_HANDCRAFTED, cfg.hidden_dim,
                                       (len(RANK_FIELDS) + N_HANDCRAFTED, cfg.hidden_dim)),
            "hidden.b": np.zeros(cfg.hidden_dim),
            "head.W": glorot_uniform(rng, cfg.hidden_dim, 1, (cfg.hidden_dim, 1)),
            "head.b": np.zeros(1),
        }
        for fname in RANK_FIELDS:
            self.p[f"proj.{fname}.W"] = glorot_uniform(rng, nf, nf, (nf, nf))
            self.p[f"proj.{fname}.b"] = np.zeros(nf)
        self.doc_forward_count = 0
        self._hash: str | None = None

    def params(self) -> dict[str, np.ndarray]:
        return self.p

    def params_hash(self) -> str:
        if self._hash is None:
            self._hash = params_hash("ranker", self.p)
        return self._hash

    def invalidate_hash(self) -> None:
        self._hash = None

    # -- encoding --------------------------------------------------------

    def _ids(self, tokens: list[str]) -> list[int]:
        ids = [self.vocab.id(t) for t in tokens[:ENCODE_TOKENS]]
        while len(ids) < ENCODE_TOKENS:
            ids.append(0)
        return ids

    def _encode_raw(self, tokens: list[str]):
        ids = self._ids(tokens)
        e = self.p["emb"][np.asarray(ids, dtype=np.int64)]
        raw, cache = conv_maxpool_forward(e, self.p["conv.W"], self.p["conv.b"],
                                          self.cfg.filter_width)
        return raw, (ids, cache)

    def encode_query(self, q_tokens: list[str]) -> np.ndarray:
        """(F, n_filters): the query vector in every field's projected space."""
        raw, _ = self._encode_raw(q_tokens)
        return np.stack([raw @ self.p[f"proj.{f}.W"] + self.p[f"proj.{f}.b"]
                         for f in RANK_FIELDS])

    def encode_doc(self, doc_fields: dict[str, list[str]]) -> np.ndarray:
        """(F, n_filters) projected field vectors; absent fields give zeros."""
        self.doc_forward_count += 1
        vecs = np.zeros((len(RANK_FIELDS), self.cfg.n_filters))
        for i, fname in enumerate(RANK_FIELDS):
            toks = doc_fields.get(fname)
            if not toks:
                continue
            raw, _ = self._encode_raw(toks)
            vecs[i] = raw @ self.p[f"proj.{fname}.W"] + self.p[f"proj.{fname}.b"]
        return vecs

    def encode_docs_batch(self, docs_fields: list[dict[str, list[str]]]) -> np.ndarray:
        """(N, F, n_filters): the serve-time batched encode path."""
        n = len(docs_fields)
        self.doc_forward_count += n
        rows_ids = []
        owners = []
        for k, df in enumerate(docs_fields):
            for i, fname in enumerate(RANK_FIELDS):
                if df.get(fname):
                    rows_ids.append(self._ids(df[fname]))
                    owners.append((k, i))
        out = np.zeros((n, len(RANK_FIELDS), self.cfg.n_filters))
        if not rows_ids:
            return out
        e = self.p["emb"][np.asarray(rows_ids, dtype=np.int64)]
        raw = conv_maxpool_batch(e, self.p["conv.W"], self.p["conv.b"],
                                 self.cfg.filter_width)
        owners = np.asarray(owners, dtype=np.int64)
        for i, fname in enumerate(RANK_FIELDS):
            sel = owners[:, 1] == i
            if sel.any():
                proj = raw[sel] @ self.p[f"proj.{fname}.W"] + self.p[f"proj.{fname}.b"]
                out[owners[sel, 0], i] = proj
        return out

    def make_doc_cache(self, index) -> "DocEncodeCache":
        return DocEncodeCache(self, index)

    def encode_from_cache(self, cache: "DocEncodeCache", doc_ids: list[int]) -> np.ndarray:
        """Batched encode using precomputed token-id matrices: the per-query
        cost is exactly the encoder math (lookup, conv, pool, projection).
        All fields of all documents go through the conv in one stacked pass."""
        n = len(doc_ids)
        self.doc_forward_count += n
        out = np.zeros((n, len(RANK_FIELDS), self.cfg.n_filters))
        stack_rows: list[int] = []
        owners_k: list[int] = []
        owners_f: list[int] = []
        for fi, fname in enumerate(RANK_FIELDS):
            row_of = cache.row_of[fname]
            for k, d in enumerate(doc_ids):
                r = row_of.get(d)
                if r is not None:
                    stack_rows.append(r)
                    owners_k.append(k)
                    owners_f.append(fi)
        if not stack_rows:
            return out
        ids = cache.all_ids[np.asarray(stack_rows, dtype=np.int64)]
        raw = conv_maxpool_batch(cache.emb32[ids], cache.conv_w32,
                                 cache.conv_b32, self.cfg.filter_width)
        owners_k_arr = np.asarray(owners_k, dtype=np.int64)
        owners_f_arr = np.asarray(owners_f, dtype=np.int64)
        for fi, fname in enumerate(RANK_FIELDS):
            sel = owners_f_arr == fi
            if sel.any():
                pw, pb = cache.proj32[fname]
                out[owners_k_arr[sel], fi] = raw[sel] @ pw + pb
        return out

    # -- scoring -----------------------------------------------------------

    def _head(self, x: np.ndarray) -> tuple[float, tuple]:
        pre = x @ self.p["hidden.W"] + self.p["hidden.b"]
        h = np.maximum(pre, 0.0)
        s = float(h @ self.p["head.W"][:, 0] + self.p["head.b"][0])
        return s, (x, pre, h)

    def score_vectors(self, qvecs: np.ndarray, doc_vecs: np.ndarray,
                      feats: np.ndarray) -> float:
        cos = np.zeros(len(RANK_FIELDS))
        for i in range(len(RANK_FIELDS)):
            cos[i], _ = _cosine_forward(qvecs[i], doc_vecs[i])
        s, _ = self._head(np.concatenate([cos, feats]))
        return s

    def score_vectors_batch(self, qvecs: np.ndarray, doc_vecs: np.ndarray,
                            feats: np.ndarray) -> np.ndarray:
        """qvecs (F, nf), doc_vecs (N, F, nf), feats (N, H) -> scores (N,)."""
        dots = np.einsum("nfd,fd->nf", doc_vecs, qvecs)
        qn = np.linalg.norm(qvecs, axis=1)
        dn = np.linalg.norm(doc_vecs, axis=2)
        denom = dn * qn[None, :]
        cos = np.where(denom > 1e-12, dots / np.maximum(denom, 1e-300), 0.0)
        x = np.concatenate([cos, feats], axis=1)
        h = np.maximum(x @ self.p["hidden.W"] + self.p["hidden.b"], 0.0)
        return h @ self.p["head.W"][:, 0] + self.p["head.b"][0]

    def score_full(self, q_tokens: list[str], doc_fields: dict[str, list[str]],
                   feats: np.ndarray) -> float:
        qvecs = self.encode_query(q_tokens)
        dvecs = self.encode_doc(doc_fields)
        return self.score_vectors(qvecs, dvecs, feats)

    # -- training ------------------------------------------------------------

    def loss_and_grads(self, batch: list[tuple[list[str], list[tuple[dict[str, list[str]], np.ndarray, int]]]]
                       ) -> tuple[float, dict[str, np.ndarray]]:
        """batch items: (query tokens, [(doc field tokens, handcrafted, grade)]).

        Docs inside a group must already be in fixed (doc id) order; pairs
        are enumerated in that order so the loss is set-invariant.
        """
        grads = {k: np.zeros_like(v) for k, v in self.p.items()}
        total = 0.0
        n_pairs = 0
        nf = self.cfg.n_filters
        for q_tokens, docs in batch:
            qraw, (q_ids, q_cache) = self._encode_raw(q_tokens)
            qvecs = np.stack([qraw @ self.p[f"proj.{f}.W"] + self.p[f"proj.{f}.b"]
                              for f in RANK_FIELDS])
            entries = []
            for doc_fields, feats, grade in docs:
                dvecs = np.zeros((len(RANK_FIELDS), nf))
                dcaches = {}
                for i, fname in enumerate(RANK_FIELDS):
                    toks = doc_fields.get(fname)
                    if not toks:
                        continue
                    raw, cache = self._encode_raw(toks)
                    dvecs[i] = raw @ self.p[f"proj.{fname}.W"] + self.p[f"proj.{fname}.b"]
                    dcaches[i] = (raw, cache)
                cos = np.zeros(len(RANK_FIELDS))
                cos_caches = []
                for i in range(len(RANK_FIELDS)):
                    c, cc = _cosine_forward(qvecs[i], dvecs[i])
                    cos[i] = c
                    cos_caches.append(cc)
                s, head_cache = self._head(np.concatenate([cos, feats]))
                entries.append({"s": s, "grade": grade, "head": head_cache,
                                "cos_caches": cos_caches, "dcaches": dcaches,
                                "ds": 0.0})
            for i in range(len(entries)):
                for j in range(len(entries)):
                    if entries[i]["grade"] <= entries[j]["grade"]:
                        continue
                    loss, g = _pair_loss(entries[i]["s"] - entries[j]["s"])
                    total += loss
                    entries[i]["ds"] += g
                    entries[j]["ds"] -= g
                    n_pairs += 1
            dqvecs = np.zeros_like(qvecs)
            for ent in entries:
                if ent["ds"] == 0.0:
                    continue
                x, pre, h = ent["head"]
                dh = ent["ds"] * self.p["head.W"][:, 0]
                grads["head.W"][:, 0] += ent["ds"] * h
                grads["head.b"][0] += ent["ds"]
                dpre = np.where(pre > 0, dh, 0.0)
                grads["hidden.W"] += np.outer(x, dpre)
                grads["hidden.b"] += dpre
                dx = self.p["hidden.W"] @ dpre
                dcos = dx[:len(RANK_FIELDS)]
                for i, fname in enumerate(RANK_FIELDS):
                    du, dv = _cosine_backward(float(dcos[i]), ent["cos_caches"][i])
                    if du is None:
                        continue
                    dqvecs[i] += du
                    if i in ent["dcaches"]:
                        raw, cache = ent["dcaches"][i]
                        grads[f"proj.{fname}.W"] += np.outer(raw, dv)
                        grads[f"proj.{fname}.b"] += dv
                        draw = self.p[f"proj.{fname}.W"] @ dv
                        ids, conv_cache = cache[0], cache[1]
                        de = conv_maxpool_backward(draw, conv_cache, self.p["conv.W"],
                                                   grads["conv.W"], grads["conv.b"])
                        np.add.at(grads["emb"], np.asarray(ids, dtype=np.int64), de)
            dqraw = np.zeros(nf)
            for i, fname in enumerate(RANK_FIELDS):
                grads[f"proj.{fname}.W"] += np.outer(qraw, dqvecs[i])
                grads[f"proj.{fname}.b"] += dqvecs[i]
                dqraw += self.p[f"proj.{fname}.W"] @ dqvecs[i]
            de_q = conv_maxpool_backward(dqraw, q_cache, self.p["conv.W"],
                                         grads["conv.W"], grads["conv.b"])
            np.add.at(grads["emb"], np.asarray(q_ids, dtype=np.int64), de_q)
        n_pairs = max(n_pairs, 1)
        return total / n_pairs, {k: g / n_pairs for k, g in grads.items()}

    # -- persistence -------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, "ranker", self.p)
        meta = {"vocab": self.vocab._id_to_token}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RankerModel":
        kind, tensors = load_checkpoint(path)
        if kind != "ranker":
            raise InputError(f"checkpoint kind {kind!r}, expected ranker")
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        cfg = RankerConfig(embed_dim=tensors["emb"].shape[1],
                           n_filters=tensors["conv.W"].shape[1],
                           hidden_dim=tensors["hidden.W"].shape[1])
        model = cls(Vocabulary(meta["vocab"]), cfg)
        for k in list(model.p):
            model.p[k] = tensors[k]
        model.invalidate_hash()
        return model


class DocEncodeCache:
    """Token-id matrix over every (document, field) pair plus f32 copies of
    the encoder weights, built once per model. Id mapping is index-time work
    and the cached serve path runs single precision (documented <=1e-5 score
    drift, same as the embedding-store route), so per-query full decode
    measures only the encoder math."""

    def __init__(self, model: RankerModel, index):
        rows: list[list[int]] = []
        self.row_of: dict[str, dict[int, int]] = {}
        for fname in RANK_FIELDS:
            row_of: dict[int, int] = {}
            for doc_id, fields in index.doc_tokens.items():
                toks = fields.get(fname)
                if toks:
                    row_of[doc_id] = len(rows)
                    rows.append(model._ids(toks))
            self.row_of[fname] = row_of
        self.all_ids = (np.asarray(rows, dtype=np.int64) if rows
                        else np.zeros((0, ENCODE_TOKENS), dtype=np.int64))
        self.emb32 = model.p["emb"].astype(np.float32)
        self.conv_w32 = model.p["conv.W"].astype(np.float32)
        self.conv_b32 = model.p["conv.b"].astype(np.float32)
        self.proj32 = {f: (model.p[f"proj.{f}.W"].astype(np.float32),
                           model.p[f"proj.{f}.b"].astype(np.float32))
                       for f in RANK_FIELDS}


class LinearRanker:
    """Light first-pass model: linear in the handcrafted features."""

    def __init__(self):
        self.w = np.zeros(N_HANDCRAFTED)
        self.b = 0.0

    def score(self, feats: np.ndarray) -> float:
        return float(feats @ self.w + self.b)

    def score_batch(self, feats: np.ndarray) -> np.ndarray:
        return feats @ self.w + self.b

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, "ranker-linear", {"w": self.w, "b": np.array([self.b])})

    @classmethod
    def load(cls, path: str | Path) -> "LinearRanker":
        kind, tensors = load_checkpoint(path)
        if kind != "ranker-linear":
            raise InputError(f"checkpoint kind {kind!r}, expected ranker-linear")
        model = cls()
        model.w = tensors["w"]
        model.b = float(tensors["b"][0])
        return model


# -- training data assembly ----------------------------------------------------


@dataclass
class RankGroup:
    query: str
    doc_ids: list[int]  # ascending; fixes pair enumeration order
    grades: list[int]


def build_ranking_groups(log: list[QueryLogEntry], index: InvertedIndex,
                         vertical: str | None = None, n_candidates: int = 10,
                         max_groups: int | None = None) -> list[RankGroup]:
    """One group per clicked entry: BM25 candidates from the clicked doc's
    vertical plus the clicked doc. Grades: sat click 2, click 1, else 0."""
    groups = []
    for e in log:
        if e.clicked_doc is None:
            continue
        if vertical is not None and e.clicked_vertical != vertical:
            continue
        cands = index.retrieve(e.query, limit=n_candidates, vertical=e.clicked_vertical)
        if e.clicked_doc not in cands:
            cands = cands[:n_candidates - 1] + [e.clicked_doc]
        ids = sorted(set(cands))
        if len(ids) < 2:
            continue
        grades = [(2 if e.sat else 1) if d == e.clicked_doc else 0 for d in ids]
        groups.append(RankGroup(query=e.query, doc_ids=ids, grades=grades))
        if max_groups is not None and len(groups) >= max_groups:
            break
    return groups


def _prepare_groups(groups: list[RankGroup], index: InvertedIndex,
                    ctx: RankFeatureContext):
    prepared = []
    for g in groups:
        q_tokens = tokenize(g.query)
        docs = []
        for doc_id, grade in zip(g.doc_ids, g.grades):
            fields = index.doc_tokens[doc_id]
            docs.append((fields, ctx.features(q_tokens, doc_id), grade))
        prepared.append((q_tokens, docs))
    return prepared


def train_ranker(groups: list[RankGroup], vocab: Vocabulary, index: InvertedIndex,
                 ctx: RankFeatureContext, cfg: RankerConfig = RankerConfig()
                 ) -> RankerModel:
    if not groups:
        raise InputError("no training groups")
    usable = [g for g in groups if max(g.grades) > 0]
    if len(usable) < len(groups):
        logging.getLogger(__name__).warning(
            "skipped %d query groups without positives", len(groups) - len(usable))
    rng = np.random.default_rng(cfg.seed)
    model = RankerModel(vocab, cfg, rng)
    prepared = _prepare_groups(usable, index, ctx)
    opt = Adam(lr=cfg.lr)
    idx = np.arange(len(prepared))
    for _ in range(cfg.epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [prepared[i] for i in idx[lo:lo + cfg.batch_size]]
            _, grads = model.loss_and_grads(batch)
            opt.step(model.p, grads)
    model.invalidate_hash()
    return model


def train_baseline_linear(groups: list[RankGroup], index: InvertedIndex,
                          ctx: RankFeatureContext, epochs: int = 8,
                          lr: float = 0.02, seed: int = 23) -> LinearRanker:
    if not groups:
        raise InputError("no training groups")
    usable = [g for g in groups if max(g.grades) > 0]
    rng = np.random.default_rng(seed)
    model = LinearRanker()
    prepared = []
    for g in usable:
        q_tokens = tokenize(g.query)
        feats = np.stack([ctx.features(q_tokens, d) for d in g.doc_ids])
        prepared.append((feats, np.asarray(g.grades)))
    params = {"w": model.w, "b": np.zeros(1)}
    opt = Adam(lr=lr)
    idx = np.arange(len(prepared))
    for _ in range(epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), 8):
            gw = np.zeros_like(model.w)
            n_pairs = 0
            for gi in idx[lo:lo + 8]:
                feats, grades = prepared[gi]
                scores = feats @ params["w"] + params["b"][0]
                for i in range(len(grades)):
                    for j in range(len(grades)):
                        if grades[i] <= grades[j]:
                            continue
                        _, g = _pair_loss(float(scores[i] - scores[j]))
                        # the bias cancels inside every margin
                        gw += g * (feats[i] - feats[j])
                        n_pairs += 1
            if n_pairs:
                opt.step(params, {"w": gw / n_pairs, "b": np.zeros(1)})
    model.w = params["w"]
    model.b = float(params["b"][0])
    return model


# -- embedding store ---------------------------------------------------------

_STORE_MAGIC = b"VSEB"
_STORE_VERSION = 1


class EmbeddingStore:
    def __init__(self, dim: int, n_fields: int, checkpoint_hash: str,
                 vectors: dict[int, np.ndarray]):
        self.dim = dim
        self.n_fields = n_fields
        self.checkpoint_hash = checkpoint_hash
        self.vectors = vectors  # doc id -> (n_fields, dim) float32

    def lookup(self, doc_id: int) -> np.ndarray:
        if doc_id not in self.vectors:
            raise MissingDocumentError(f"doc {doc_id} not in embedding store")
        return self.vectors[doc_id]

    def save(self, path: str | Path) -> None:
        hash_bytes = self.checkpoint_hash.encode("ascii")
        if len(hash_bytes) != 64:
            raise FormatError("checkpoint hash must be 64 hex chars")
        with open(path, "wb") as f:
            f.write(_STORE_MAGIC)
            f.write(struct.pack("<IIII", _STORE_VERSION, self.dim, self.n_fields,
                                len(self.vectors)))
            f.write(hash_bytes)
            for doc_id in sorted(self.vectors):
                f.write(struct.pack("<q", doc_id))
                f.write(self.vectors[doc_id].astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        buf = Path(path).read_bytes()
        if buf[:4] != _STORE_MAGIC:
            raise FormatError(f"{path}: bad magic")
        version, dim, n_fields, count = struct.unpack_from("<IIII", buf, 4)
        if version != _STORE_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        off = 20
        chash = buf[off:off + 64].decode("ascii")
        off += 64
        rec = n_fields * dim
        vectors = {}
        for _ in range(count):
            (doc_id,) = struct.unpack_from("<q", buf, off)
            off += 8
            arr = np.frombuffer(buf, dtype="<f4", count=rec, offset=off).copy()
            off += 4 * rec
            vectors[doc_id] = arr.reshape(n_fields, dim)
        if off != len(buf):
            raise FormatError(f"{path}: trailing bytes")
        return cls(dim, n_fields, chash, vectors)


def build_embedding_store(model: RankerModel, doc_ids: list[int],
                          index: InvertedIndex, batch: int = 256) -> EmbeddingStore:
    vectors: dict[int, np.ndarray] = {}
    for lo in range(0, len(doc_ids), batch):
        chunk = doc_ids[lo:lo + batch]
        vecs = model.encode_docs_batch([index.doc_tokens[d] for d in chunk])
        for d, v in zip(chunk, vecs):
            vectors[d] = v.astype(np.float32)
    return EmbeddingStore(model.cfg.n_filters, len(RANK_FIELDS),
                          model.params_hash(), vectors)


def score_precomputed(model: RankerModel, q_tokens: list[str], store: EmbeddingStore,
                      doc_id: int, feats: np.ndarray) -> float:
    if store.checkpoint_hash != model.params_hash():
        raise StaleStoreError(
            f"store built from checkpoint {store.checkpoint_hash[:12]}..., "
            f"model is {model.params_hash()[:12]}...")
    qvecs = model.encode_query(q_tokens)
    return model.score_vectors(qvecs, store.lookup(doc_id).astype(np.float64), feats)


# -- ranking strategies ---------------------------------------------------------


def _order(doc_ids: list[int], scores: np.ndarray) -> list[int]:
    return [d for d, _ in sorted(zip(doc_ids, scores), key=lambda x: (-x[1], x[0]))]


def rank_full(model: RankerModel, query: str, doc_ids: list[int],
              index: InvertedIndex, ctx: RankFeatureContext,
              query_id: str = "", enc_cache: DocEncodeCache | None = None) -> RankedList:
    q_tokens = tokenize(query)
    qvecs = model.encode_query(q_tokens)
    if enc_cache is not None:
        dvecs = model.encode_from_cache(enc_cache, doc_ids)
    else:
        dvecs = model.encode_docs_batch([index.doc_tokens[d] for d in doc_ids])
    feats = ctx.features_batch(q_tokens, doc_ids)
    scores = model.score_vectors_batch(qvecs, dvecs, feats)
    order = _order(doc_ids, scores)
    smap = dict(zip(doc_ids, scores))
    return RankedList(query_id=query_id, doc_ids=order,
                      scores=[float(smap[d]) for d in order], strategy="full")


def rank_precomputed(model: RankerModel, store: EmbeddingStore, query: str,
                     doc_ids: list[int], ctx: RankFeatureContext,
                     query_id: str = "") -> RankedList:
    if store.checkpoint_hash != model.params_hash():
        raise StaleStoreError("embedding store does not match model checkpoint")
    q_tokens = tokenize(query)
    qvecs = model.encode_query(q_tokens)
    dvecs = np.stack([store.lookup(d).astype(np.float64) for d in doc_ids])
    feats = ctx.features_batch(q_tokens, doc_ids)
    scores = model.score_vectors_batch(qvecs, dvecs, feats)
    order = _order(doc_ids, scores)
    smap = dict(zip(doc_ids, scores))
    return RankedList(query_id=query_id, doc_ids=order,
                      scores=[float(smap[d]) for d in order], strategy="precomputed")


def rank_two_pass(light: LinearRanker, deep: RankerModel, query: str,
                  doc_ids: list[int], k: int, index: InvertedIndex,
                  ctx: RankFeatureContext, query_id: str = "",
                  enc_cache: DocEncodeCache | None = None) -> RankedList:
    """Light model orders everything; deep model rescores the top K; the final
    list is the deep-ordered top K followed by the light-ordered remainder."""
    if k < 1:
        raise InputError("K must be >= 1")
    q_tokens = tokenize(query)
    feats = ctx.features_batch(q_tokens, doc_ids)
    light_scores = light.score_batch(feats)
    light_order = _order(doc_ids, light_scores)
    top = light_order[:k]
    rest = light_order[k:]
    deep_part = rank_full(deep, query, top, index, ctx, enc_cache=enc_cache)
    light_map = dict(zip(doc_ids, light_scores))
    doc_order = deep_part.doc_ids + rest
    # tail keeps light-model order; its scores are shifted below the deep
    # head so the emitted score column stays non-increasing
    tail = [float(light_map[d]) for d in rest]
    if tail and deep_part.scores:
        shift = min(0.0, min(deep_part.scores) - max(tail))
        tail = [s + shift for s in tail]
    return RankedList(query_id=query_id, doc_ids=doc_order,
                      scores=deep_part.scores + tail, strategy="two-pass")
