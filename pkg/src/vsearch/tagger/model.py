"""Query tagger: linear-chain CRF (BIO) and semi-Markov CRF (segments).

Both models are linear in handcrafted features; the LSTM-SCRF variants add
bi-LSTM emission scores (replacing word features, or on top of everything).
Decoding runs through vsearch.kernels; training uses the forward-backward
recursions here, which the oracle tests check against exhaustive
enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vsearch import kernels
from vsearch.errors import InputError
from vsearch.nn import Adam, BiLSTM, Dense, Embedding, load_checkpoint, save_checkpoint
from vsearch.nn.losses import logsumexp
from vsearch.tagger.features import CHAR, LEXICON, WORD, FeatureExtractor
from vsearch.tagger.schema import (OUTSIDE, Segmentation, TagAnnotation, TagSchema,
                                   bio_to_segments)
from vsearch.textprep import Lexicon, Vocabulary

MODES = ("CRF", "SCRF", "SCRF-nolex", "LSTM-SCRF", "LSTM-SCRF-all")

_MODE_FAMILIES: dict[str, frozenset[str]] = {
    "CRF": frozenset({CHAR, WORD, LEXICON}),
    "SCRF": frozenset({CHAR, WORD, LEXICON}),
    "SCRF-nolex": frozenset({CHAR, WORD}),
    "LSTM-SCRF": frozenset({CHAR, LEXICON}),
    "LSTM-SCRF-all": frozenset({CHAR, WORD, LEXICON}),
}

_BIO_MASK_PENALTY = -1e4


@dataclass(frozen=True)
class TaggerConfig:
    mode: str = "SCRF"
    max_segment_len: int = 4
    epochs: int = 8
    lr: float = 0.02
    batch_size: int = 16
    seed: int = 13
    lstm_embed_dim: int = 50
    lstm_hidden: int = 50
    lstm_vocab_size: int = 20_000
    enforce_bio: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"unknown tagger mode {self.mode!r}")


class TaggerModel:
    def __init__(self, cfg: TaggerConfig, lexicons: dict[str, Lexicon],
                 feat_vocab: dict[str, int], schema: TagSchema | None = None,
                 token_vocab: Vocabulary | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg
        self.schema = schema or TagSchema()
        self.lexicons = lexicons
        self.feat_vocab = feat_vocab
        self.extractor = FeatureExtractor(lexicons, _MODE_FAMILIES[cfg.mode])
        self.segmental = cfg.mode != "CRF"
        self.use_lstm = cfg.mode in ("LSTM-SCRF", "LSTM-SCRF-all")
        n_out = self.schema.n_types if self.segmental else self.schema.n_labels
        self.n_out = n_out
        self.W = np.zeros((max(len(feat_vocab), 1), n_out))
        self.T = np.zeros((n_out, n_out))
        self.token_vocab = token_vocab
        if self.use_lstm:
            if token_vocab is None:
                raise InputError("LSTM tagger modes need a token vocabulary")
            rng = rng or np.random.default_rng(cfg.seed)
            self.emb = Embedding(len(token_vocab), cfg.lstm_embed_dim, rng)
            self.lstm = BiLSTM(cfg.lstm_embed_dim, cfg.lstm_hidden, rng)
            self.proj = Dense(2 * cfg.lstm_hidden, n_out, rng)

    # -- parameter plumbing ------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        out = {"W": self.W, "T": self.T}
        if self.use_lstm:
            out["emb.table"] = self.emb.params["table"]
            for k, v in self.lstm.params.items():
                out[f"lstm.{k}"] = v
            out["proj.W"] = self.proj.params["W"]
            out["proj.b"] = self.proj.params["b"]
        return out

    # -- feature/score assembly --------------------------------------------

    def _feat_ids(self, feats: list[str]) -> np.ndarray:
        ids = [self.feat_vocab[f] for f in feats if f in self.feat_vocab]
        return np.asarray(ids, dtype=np.int64)

    def _lstm_scores(self, tokens: list[str]) -> np.ndarray:
        ids = self.token_vocab.encode(list(tokens))
        e = self.emb.forward(ids)
        h = self.lstm.forward(e)
        return self.proj.forward(h)

    def _bio_mask(self) -> np.ndarray:
        """Additive penalty matrix that forbids I-x after anything but B-x/I-x."""
        n = self.schema.n_labels
        mask = np.zeros((n, n))
        for nxt in range(1, n):
            label = self.schema.labels[nxt]
            if not label.startswith("I-"):
                continue
            etype = label[2:]
            for prev in range(n):
                plabel = self.schema.labels[prev]
                if plabel == f"B-{etype}" or plabel == f"I-{etype}":
                    continue
                mask[prev, nxt] = _BIO_MASK_PENALTY
        return mask

    def chain_scores(self, tokens, cased=None) -> tuple[np.ndarray, np.ndarray]:
        """(emissions (T, n_labels), transitions) for the chain model."""
        if len(tokens) == 0:
            raise InputError("empty query")
        pos_feats = self.extractor.positions(list(tokens), list(cased) if cased else None)
        em = np.zeros((len(tokens), self.n_out))
        for t, feats in enumerate(pos_feats):
            ids = self._feat_ids(feats)
            if ids.size:
                em[t] = self.W[ids].sum(axis=0)
        trans = self.T
        if self.cfg.enforce_bio:
            trans = trans + self._bio_mask()
            em = em.copy()
            for y in range(self.n_out):
                if self.schema.labels[y].startswith("I-"):
                    em[0, y] += _BIO_MASK_PENALTY
        return em, trans

    def segment_scores(self, tokens, cased=None) -> np.ndarray:
        """(T, L, n_types) lattice scores; illegal cells are -inf."""
        if len(tokens) == 0:
            raise InputError("empty query")
        n = len(tokens)
        max_l = self.cfg.max_segment_len
        seg_feats = self.extractor.segments(list(tokens), list(cased) if cased else None, max_l)
        scores = np.full((n, max_l, self.n_out), -np.inf)
        lstm = self._lstm_scores(list(tokens)) if self.use_lstm else None
        if lstm is not None:
            prefix = np.vstack([np.zeros(self.n_out), np.cumsum(lstm, axis=0)])
        for (i, j), feats in seg_feats.items():
            ids = self._feat_ids(feats)
            base = self.W[ids].sum(axis=0) if ids.size else np.zeros(self.n_out)
            if lstm is not None:
                base = base + prefix[j] - prefix[i]
            cell = np.full(self.n_out, -np.inf)
            cell[1:] = base[1:]
            if j - i == 1:
                cell[0] = base[0]
            scores[i, j - i - 1] = cell
        return scores

    # -- inference -----------------------------------------------------------

    def log_partition(self, tokens, cased=None) -> float:
        if self.segmental:
            return float(kernels.scrf_logz(self.segment_scores(tokens, cased), self.T))
        em, trans = self.chain_scores(tokens, cased)
        return float(kernels.crf_logz(em, trans))

    def decode_labels(self, tokens, cased=None) -> list[str]:
        """Raw argmax BIO labels. Without BIO constraints the chain model may
        emit inconsistent sequences; decode() reads them leniently."""
        if self.segmental:
            from vsearch.tagger.schema import segments_to_bio
            return segments_to_bio(self.decode(tokens, cased))
        em, trans = self.chain_scores(tokens, cased)
        path = kernels.crf_viterbi(em, trans)
        return [self.schema.labels[y] for y in path]

    def decode(self, tokens, cased=None) -> Segmentation:
        if self.segmental:
            segs = kernels.scrf_viterbi(self.segment_scores(tokens, cased), self.T)
            named = tuple((s, e, self.schema.segment_types[y]) for s, e, y in segs)
            return Segmentation(length=len(tokens), segments=tuple(named))
        em, trans = self.chain_scores(tokens, cased)
        path = kernels.crf_viterbi(em, trans)
        return bio_to_segments([self.schema.labels[y] for y in path])

    # -- training ------------------------------------------------------------

    def zero_grads(self) -> dict[str, np.ndarray]:
        grads = {"W": np.zeros_like(self.W), "T": np.zeros_like(self.T)}
        if self.use_lstm:
            self.emb.zero_grads()
            self.lstm.zero_grads()
            self.proj.zero_grads()
        return grads

    def _collect_lstm_grads(self, grads: dict[str, np.ndarray]) -> None:
        grads["emb.table"] = self.emb.grads["table"]
        for k, v in self.lstm.grads.items():
            grads[f"lstm.{k}"] = v
        grads["proj.W"] = self.proj.grads["W"]
        grads["proj.b"] = self.proj.grads["b"]

    def loss_and_grads(self, batch: list[TagAnnotation]) -> tuple[float, dict[str, np.ndarray]]:
        grads = self.zero_grads()
        total = 0.0
        for ann in batch:
            if self.segmental:
                total += self._scrf_example(ann, grads)
            else:
                total += self._crf_example(ann, grads)
        if self.use_lstm:
            self._collect_lstm_grads(grads)
        n = max(len(batch), 1)
        return total / n, {k: g / n for k, g in grads.items()}

    def _crf_example(self, ann: TagAnnotation, grads: dict[str, np.ndarray]) -> float:
        tokens = list(ann.tokens)
        em, trans = self.chain_scores(tokens)
        gold = [self.schema.label_id(l) for l in ann.labels]
        t_len, n = em.shape
        alpha = np.zeros((t_len, n))
        alpha[0] = em[0]
        for t in range(1, t_len):
            alpha[t] = em[t] + logsumexp(alpha[t - 1][:, None] + trans, axis=0)
        beta = np.zeros((t_len, n))
        for t in range(t_len - 2, -1, -1):
            beta[t] = logsumexp(trans + (em[t + 1] + beta[t + 1])[None, :], axis=1)
        logz = float(logsumexp(alpha[-1], axis=0))
        gold_score = em[np.arange(t_len), gold].sum()
        gold_score += sum(trans[gold[t - 1], gold[t]] for t in range(1, t_len))
        loss = logz - float(gold_score)

        dem = np.exp(alpha + beta - logz)
        dem[np.arange(t_len), gold] -= 1.0
        pos_feats = self.extractor.positions(tokens)
        for t, feats in enumerate(pos_feats):
            ids = self._feat_ids(feats)
            if ids.size:
                np.add.at(grads["W"], ids, dem[t])
        for t in range(1, t_len):
            pair = np.exp(alpha[t - 1][:, None] + trans + (em[t] + beta[t])[None, :] - logz)
            pair[gold[t - 1], gold[t]] -= 1.0
            grads["T"] += pair
        return loss

    def _scrf_example(self, ann: TagAnnotation, grads: dict[str, np.ndarray]) -> float:
        tokens = list(ann.tokens)
        seg_scores = self.segment_scores(tokens)
        trans = self.T
        gold_seg = bio_to_segments(list(ann.labels))
        gold = [(s, e, self.schema.type_id(y)) for s, e, y in gold_seg.segments]
        t_len = len(tokens)
        max_l = self.cfg.max_segment_len
        n = self.n_out

        alpha = np.full((t_len + 1, n), -np.inf)
        alphain = np.full((t_len + 1, n), -np.inf)
        alphain[0] = 0.0
        for j in range(1, t_len + 1):
            cands = [alphain[j - l] + seg_scores[j - l, l - 1]
                     for l in range(1, min(max_l, j) + 1)]
            alpha[j] = logsumexp(np.stack(cands), axis=0)
            if j < t_len:
                alphain[j] = logsumexp(alpha[j][:, None] + trans, axis=0)
        logz = float(logsumexp(alpha[t_len], axis=0))

        beta = np.full((t_len + 1, n), -np.inf)
        beta[t_len] = 0.0
        gamma = np.full((t_len + 1, n), -np.inf)
        for i in range(t_len - 1, -1, -1):
            ls = [seg_scores[i, l - 1] + beta[i + l]
                  for l in range(1, min(max_l, t_len - i) + 1)]
            gamma[i] = logsumexp(np.stack(ls), axis=0)
            beta[i] = logsumexp(trans + gamma[i][None, :], axis=1)

        gold_score = 0.0
        prev = None
        for s, e, y in gold:
            if (e - s) > max_l:
                raise InputError(f"gold segment longer than {max_l}")
            gold_score += seg_scores[s, e - s - 1, y]
            if prev is not None:
                gold_score += trans[prev, y]
            prev = y
        loss = logz - float(gold_score)

        dseg = np.zeros((t_len, max_l, n))
        for i in range(t_len):
            for l in range(1, min(max_l, t_len - i) + 1):
                m = alphain[i] + seg_scores[i, l - 1] + beta[i + l] - logz
                dseg[i, l - 1] = np.exp(m)
        for s, e, y in gold:
            dseg[s, e - s - 1, y] -= 1.0

        dtrans = np.zeros((n, n))
        for i in range(1, t_len):
            dtrans += np.exp(alpha[i][:, None] + trans + gamma[i][None, :] - logz)
        prev = None
        for _, _, y in gold:
            if prev is not None:
                dtrans[prev, y] -= 1.0
            prev = y
        grads["T"] += dtrans

        seg_feats = self.extractor.segments(tokens, None, max_l)
        if self.use_lstm:
            # layer caches are still valid from the segment_scores() forward
            dproj = np.zeros((t_len, n))
        for (i, j), feats in seg_feats.items():
            d = dseg[i, j - i - 1]
            fids = self._feat_ids(feats)
            if fids.size:
                np.add.at(grads["W"], fids, d)
            if self.use_lstm:
                dproj[i:j] += d
        if self.use_lstm:
            dh = self.proj.backward(dproj)
            de = self.lstm.backward(dh)
            self.emb.backward(de)
        return loss

    # -- persistence -----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        tensors = {"W": self.W, "T": self.T}
        if self.use_lstm:
            tensors["emb.table"] = self.emb.params["table"]
            for k, v in self.lstm.params.items():
                tensors[f"lstm.{k}"] = v
            tensors["proj.W"] = self.proj.params["W"]
            tensors["proj.b"] = self.proj.params["b"]
        save_checkpoint(path, "tagger", tensors)
        meta = {
            "mode": self.cfg.mode,
            "max_segment_len": self.cfg.max_segment_len,
            "enforce_bio": self.cfg.enforce_bio,
            "feat_vocab": self.feat_vocab,
            "token_vocab": (self.token_vocab._id_to_token if self.token_vocab else None),
        }
        Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, lexicons: dict[str, Lexicon]) -> "TaggerModel":
        kind, tensors = load_checkpoint(path)
        if kind != "tagger":
            raise InputError(f"checkpoint kind {kind!r}, expected tagger")
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        cfg = TaggerConfig(mode=meta["mode"], max_segment_len=meta["max_segment_len"],
                           enforce_bio=meta["enforce_bio"])
        token_vocab = Vocabulary(meta["token_vocab"]) if meta["token_vocab"] else None
        model = cls(cfg, lexicons, meta["feat_vocab"], token_vocab=token_vocab)
        model.W = tensors["W"]
        model.T = tensors["T"]
        if model.use_lstm:
            model.emb.params["table"] = tensors["emb.table"]
            for k in list(model.lstm.fw.params):
                model.lstm.fw.params[k] = tensors[f"lstm.fw.{k}"]
                model.lstm.bw.params[k] = tensors[f"lstm.bw.{k}"]
            model.proj.params["W"] = tensors["proj.W"]
            model.proj.params["b"] = tensors["proj.b"]
        return model


def _collect_features(data: list[TagAnnotation], extractor: FeatureExtractor,
                      segmental: bool, max_l: int) -> dict[str, int]:
    vocab: dict[str, int] = {}
    for ann in data:
        tokens = list(ann.tokens)
        if segmental:
            groups = extractor.segments(tokens, None, max_l).values()
        else:
            groups = extractor.positions(tokens)
        for feats in groups:
            for f in feats:
                if f not in vocab:
                    vocab[f] = len(vocab)
    return vocab


def train_tagger(data: list[TagAnnotation], lexicons: dict[str, Lexicon],
                 cfg: TaggerConfig = TaggerConfig()) -> TaggerModel:
    if not data:
        raise InputError("no training data")
    rng = np.random.default_rng(cfg.seed)
    extractor = FeatureExtractor(lexicons, _MODE_FAMILIES[cfg.mode])
    segmental = cfg.mode != "CRF"
    feat_vocab = _collect_features(data, extractor, segmental, cfg.max_segment_len)
    token_vocab = None
    if cfg.mode in ("LSTM-SCRF", "LSTM-SCRF-all"):
        token_vocab = Vocabulary.build((list(a.tokens) for a in data), cfg.lstm_vocab_size)
    model = TaggerModel(cfg, lexicons, feat_vocab, token_vocab=token_vocab, rng=rng)
    opt = Adam(lr=cfg.lr)
    idx = np.arange(len(data))
    for _ in range(cfg.epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [data[i] for i in idx[lo:lo + cfg.batch_size]]
            _, grads = model.loss_and_grads(batch)
            opt.step(model.params(), grads)
    return model
