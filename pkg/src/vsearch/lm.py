"""LSTM language model for completion ranking, normalized and unnormalized.

Per-token log-probability is v_w.h - logZ(h); the unnormalized scorer
replaces logZ(h) with one trained scalar so per-token cost no longer scans
the vocabulary. The scalar is fit jointly through a penalty that shrinks
the spread of logZ(h) - b during training (or post-hoc as mean held-out
logZ when the penalty weight is zero). Candidate scores sum over exactly
the candidate's tokens (begin marker fed as context, end marker used in
training only).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vsearch import kernels
from vsearch.errors import InputError, TrainingDivergedError
from vsearch.nn import LSTM, Adam, Embedding, glorot_uniform, load_checkpoint, save_checkpoint
from vsearch.nn.losses import logsumexp
from vsearch.textprep import PAD_TOKEN, UNK_TOKEN, Vocabulary

BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True)
class LMConfig:
    embed_dim: int = 100
    hidden: int = 100
    vocab_size: int = 100_000
    alpha: float = 0.1
    epochs: int = 6
    lr: float = 0.002
    batch_size: int = 16
    holdout_fraction: float = 0.05
    seed: int = 11


def build_lm_vocab(corpus: list[list[str]], max_size: int) -> Vocabulary:
    counts: dict[str, int] = {}
    for toks in corpus:
        for t in toks:
            counts[t] = counts.get(t, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [t for t, _ in ranked[: max(0, max_size - 4)]]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN, BOS, EOS] + keep)


class LanguageModel:
    def __init__(self, vocab: Vocabulary, cfg: LMConfig,
                 rng: np.random.Generator | None = None):
        self.vocab = vocab
        self.cfg = cfg
        rng = rng or np.random.default_rng(cfg.seed)
        self.emb = Embedding(len(vocab), cfg.embed_dim, rng)
        self.lstm = LSTM(cfg.embed_dim, cfg.hidden, rng)
        # row j is the output vector of word j
        self.proj = glorot_uniform(rng, cfg.hidden, len(vocab), (len(vocab), cfg.hidden))
        self.b = np.array([0.0])

    def params(self) -> dict[str, np.ndarray]:
        out = {"emb.table": self.emb.params["table"], "proj": self.proj, "b": self.b}
        for k, v in self.lstm.params.items():
            out[f"lstm.{k}"] = v
        return out

    # -- scoring ---------------------------------------------------------

    def _context_states(self, token_ids: list[int]) -> np.ndarray:
        """Hidden state h_i for predicting token i: inputs are BOS + tokens[:-1]."""
        bos = self.vocab.id(BOS)
        inputs = [bos] + list(token_ids[:-1])
        x = self.emb.params["table"][np.asarray(inputs, dtype=np.int64)]
        return kernels.lstm_forward(x, self.lstm.params["Wx"],
                                    self.lstm.params["Wh"], self.lstm.params["b"])

    def token_ids(self, tokens: list[str]) -> list[int]:
        return [self.vocab.id(t) for t in tokens]

    def score_normalized(self, tokens: list[str]) -> float:
        """Sum over tokens of v_w.h - log sum_j exp(v_j.h); O(V) per token."""
        ids = self.token_ids(tokens)
        if not ids:
            return 0.0
        h = self._context_states(ids)
        logits = h @ self.proj.T
        logz = logsumexp(logits, axis=1)
        picked = logits[np.arange(len(ids)), ids]
        return float((picked - logz).sum())

    def score_unnormalized(self, tokens: list[str]) -> float:
        """Sum over tokens of v_w.h - b; per-token cost independent of V."""
        ids = self.token_ids(tokens)
        if not ids:
            return 0.0
        h = self._context_states(ids)
        picked = np.einsum("td,td->t", h, self.proj[ids])
        return float((picked - self.b[0]).sum())

    def logz_values(self, tokens: list[str]) -> np.ndarray:
        """Per-position log-partition values over the candidate's contexts."""
        ids = self.token_ids(tokens)
        if not ids:
            return np.zeros(0)
        h = self._context_states(ids)
        return logsumexp(h @ self.proj.T, axis=1)

    def step_log_probs(self, tokens: list[str]) -> np.ndarray:
        """(T, V) log-probability table, one row per scored token position."""
        ids = self.token_ids(tokens)
        h = self._context_states(ids)
        logits = h @ self.proj.T
        return logits - logsumexp(logits, axis=1)[:, None]

    # -- training ----------------------------------------------------------

    def _sequence_grads(self, ids: list[int], grads: dict[str, np.ndarray],
                        alpha: float) -> tuple[float, int]:
        bos, eos = self.vocab.id(BOS), self.vocab.id(EOS)
        inputs = np.asarray([bos] + ids, dtype=np.int64)
        targets = np.asarray(ids + [eos], dtype=np.int64)
        x = self.emb.forward(inputs)
        h = self.lstm.forward(x)
        logits = h @ self.proj.T
        logz = logsumexp(logits, axis=1)
        probs = np.exp(logits - logz[:, None])
        t_len = len(targets)
        ce = float((logz - logits[np.arange(t_len), targets]).sum())
        resid = logz - self.b[0]
        penalty = float(alpha * (resid ** 2).sum())
        dlogits = probs.copy()
        dlogits[np.arange(t_len), targets] -= 1.0
        if alpha > 0.0:
            dlogits += (2.0 * alpha * resid)[:, None] * probs
            grads["b"][0] += float(-2.0 * alpha * resid.sum())
        grads["proj"] += dlogits.T @ h
        dh = dlogits @ self.proj
        dx = self.lstm.backward(dh)
        self.emb.backward(dx)
        return ce + penalty, t_len

    def loss_and_grads(self, batch: list[list[int]]) -> tuple[float, dict[str, np.ndarray]]:
        self.emb.zero_grads()
        self.lstm.zero_grads()
        grads = {"proj": np.zeros_like(self.proj), "b": np.zeros(1)}
        total = 0.0
        positions = 0
        for ids in batch:
            loss, n = self._sequence_grads(ids, grads, self.cfg.alpha)
            total += loss
            positions += n
        positions = max(positions, 1)
        grads["emb.table"] = self.emb.grads["table"]
        for k, v in self.lstm.grads.items():
            grads[f"lstm.{k}"] = v
        return total / positions, {k: g / positions for k, g in grads.items()}

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, "lm", self.params())
        meta = {"vocab": self.vocab._id_to_token}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LanguageModel":
        kind, tensors = load_checkpoint(path)
        if kind != "lm":
            raise InputError(f"checkpoint kind {kind!r}, expected lm")
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        vocab = Vocabulary(meta["vocab"])
        cfg = LMConfig(embed_dim=tensors["emb.table"].shape[1],
                       hidden=tensors["lstm.Wh"].shape[0])
        model = cls(vocab, cfg)
        model.emb.params["table"] = tensors["emb.table"]
        for k in list(model.lstm.params):
            model.lstm.params[k] = tensors[f"lstm.{k}"]
        model.proj = tensors["proj"]
        model.b = tensors["b"]
        return model


def train_lm(corpus: list[list[str]], cfg: LMConfig = LMConfig()) -> LanguageModel:
    """Train on token sequences (begin/end markers added here)."""
    if not corpus:
        raise InputError("empty corpus")
    rng = np.random.default_rng(cfg.seed)
    vocab = build_lm_vocab(corpus, cfg.vocab_size)
    model = LanguageModel(vocab, cfg, rng)
    encoded = [[vocab.id(t) for t in toks] for toks in corpus if toks]
    n_hold = max(1, int(len(encoded) * cfg.holdout_fraction))
    perm = rng.permutation(len(encoded))
    holdout = [encoded[i] for i in perm[:n_hold]]
    train = [encoded[i] for i in perm[n_hold:]] or holdout
    opt = Adam(lr=cfg.lr)
    idx = np.arange(len(train))
    for _ in range(cfg.epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [train[i] for i in idx[lo:lo + cfg.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"LM loss became {loss}")
            opt.step(model.params(), grads)
    if cfg.alpha == 0.0:
        logzs = []
        for ids in holdout:
            toks = [vocab.token(i) for i in ids]
            logzs.append(model.logz_values(toks + [EOS]))
        model.b = np.array([float(np.concatenate(logzs).mean())])
    return model
