"""7-way query intent classification.

The deep model is a width-3 CNN text encoder whose pooled output is
concatenated with 10 handcrafted features and pushed through one hidden
layer; the baseline is multinomial logistic regression over bag-of-words
counts plus the same handcrafted features. An LSTM encoder variant exists
for offline comparison only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vsearch.errors import InputError
from vsearch.nn import (
    Adam,
    BiLSTM,
    Conv1DMaxPool,
    Dense,
    Embedding,
    Relu,
    load_checkpoint,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_grad,
)
from vsearch.synth.world import VERTICALS
from vsearch.textprep import Lexicon, TokenSequence, Vocabulary, lexicon_match

INTENT_CLASSES = VERTICALS  # people, job, company, group, school, event, help
N_FEATURES = 10
_MAX_TOKENS = 12


@dataclass(frozen=True)
class IntentConfig:
    embed_dim: int = 64
    n_filters: int = 128
    filter_width: int = 3
    hidden_dim: int = 200
    encoder: str = "cnn"  # "lstm" is the offline comparison variant
    lstm_hidden: int = 128
    epochs: int = 4
    lr: float = 0.001
    batch_size: int = 32
    seed: int = 7


def featurize_intent(q: TokenSequence, lexicons: dict[str, Lexicon]) -> np.ndarray:
    """10 handcrafted features: 7 lexicon hit counts (one per entity-typed
    lexicon), token count, contains-digit, contains-quoted-phrase."""
    tokens = list(q.tokens)
    flags = lexicon_match([lexicons[t] for t in sorted(lexicons)], tokens)
    counts = [float(sum(flags[t])) for t in sorted(flags)]
    has_digit = float(any(any(c.isdigit() for c in t) for t in tokens))
    has_quote = float(q.raw.count('"') >= 2)
    feats = np.array(counts + [float(len(tokens)), has_digit, has_quote])
    if feats.shape[0] != N_FEATURES:
        raise InputError(f"expected {N_FEATURES} features, got {feats.shape[0]}")
    return feats


def _pad_ids(ids: list[int], width: int) -> list[int]:
    out = list(ids[:_MAX_TOKENS])
    while len(out) < width:
        out.append(0)
    return out


class IntentModel:
    def __init__(self, vocab: Vocabulary, cfg: IntentConfig,
                 rng: np.random.Generator | None = None):
        self.vocab = vocab
        self.cfg = cfg
        rng = rng or np.random.default_rng(cfg.seed)
        self.emb = Embedding(len(vocab), cfg.embed_dim, rng)
        if cfg.encoder == "cnn":
            self.conv = Conv1DMaxPool(cfg.embed_dim, cfg.n_filters, cfg.filter_width, rng)
            text_dim = cfg.n_filters
        elif cfg.encoder == "lstm":
            self.lstm = BiLSTM(cfg.embed_dim, cfg.lstm_hidden, rng)
            text_dim = 2 * cfg.lstm_hidden
        else:
            raise InputError(f"unknown encoder {cfg.encoder!r}")
        self.hidden = Dense(text_dim + N_FEATURES, cfg.hidden_dim, rng)
        self.relu = Relu()
        self.out = Dense(cfg.hidden_dim, len(INTENT_CLASSES), rng)

    def params(self) -> dict[str, np.ndarray]:
        out = {"emb.table": self.emb.params["table"],
               "hidden.W": self.hidden.params["W"], "hidden.b": self.hidden.params["b"],
               "out.W": self.out.params["W"], "out.b": self.out.params["b"]}
        if self.cfg.encoder == "cnn":
            out["conv.W"] = self.conv.params["W"]
            out["conv.b"] = self.conv.params["b"]
        else:
            for k, v in self.lstm.params.items():
                out[f"lstm.{k}"] = v
        return out

    def _encode(self, ids: list[int]) -> np.ndarray:
        e = self.emb.forward(_pad_ids(ids, self.cfg.filter_width))
        if self.cfg.encoder == "cnn":
            return self.conv.forward(e)
        h = self.lstm.forward(e)
        return np.concatenate([h[-1, :self.cfg.lstm_hidden], h[0, self.cfg.lstm_hidden:]])

    def logits(self, ids: list[int], feats: np.ndarray) -> np.ndarray:
        text_vec = self._encode(ids)
        x = np.concatenate([text_vec, feats])
        return self.out.forward(self.relu.forward(self.hidden.forward(x)))

    def predict(self, q: TokenSequence, feats: np.ndarray) -> np.ndarray:
        return softmax(self.logits(list(q.ids), feats))

    def zero_grads(self) -> None:
        self.emb.zero_grads()
        if self.cfg.encoder == "cnn":
            self.conv.zero_grads()
        else:
            self.lstm.zero_grads()
        self.hidden.zero_grads()
        self.out.zero_grads()

    def grads(self) -> dict[str, np.ndarray]:
        out = {"emb.table": self.emb.grads["table"],
               "hidden.W": self.hidden.grads["W"], "hidden.b": self.hidden.grads["b"],
               "out.W": self.out.grads["W"], "out.b": self.out.grads["b"]}
        if self.cfg.encoder == "cnn":
            out["conv.W"] = self.conv.grads["W"]
            out["conv.b"] = self.conv.grads["b"]
        else:
            for k, v in self.lstm.grads.items():
                out[f"lstm.{k}"] = v
        return out

    def loss_and_grads(self, batch: list[tuple[list[int], np.ndarray, int]]
                       ) -> tuple[float, dict[str, np.ndarray]]:
        self.zero_grads()
        total = 0.0
        text_dim = self.cfg.n_filters if self.cfg.encoder == "cnn" else 2 * self.cfg.lstm_hidden
        for ids, feats, label in batch:
            logits = self.logits(ids, feats)
            loss, probs = softmax_cross_entropy(logits, label)
            total += loss
            dlogits = softmax_cross_entropy_grad(probs, label)
            dx = self.hidden.backward(self.relu.backward(self.out.backward(dlogits)))
            dtext = dx[:text_dim]
            if self.cfg.encoder == "cnn":
                de = self.conv.backward(dtext)
            else:
                dh = np.zeros((len(_pad_ids(ids, self.cfg.filter_width)),
                               2 * self.cfg.lstm_hidden))
                dh[-1, :self.cfg.lstm_hidden] = dtext[:self.cfg.lstm_hidden]
                dh[0, self.cfg.lstm_hidden:] = dtext[self.cfg.lstm_hidden:]
                de = self.lstm.backward(dh)
            self.emb.backward(de)
        n = max(len(batch), 1)
        return total / n, {k: g / n for k, g in self.grads().items()}

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, "intent", self.params())
        meta = {"encoder": self.cfg.encoder, "classes": list(INTENT_CLASSES),
                "vocab": self.vocab._id_to_token}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "IntentModel":
        kind, tensors = load_checkpoint(path)
        if kind != "intent":
            raise InputError(f"checkpoint kind {kind!r}, expected intent")
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        cfg = IntentConfig(encoder=meta["encoder"])
        model = cls(Vocabulary(meta["vocab"]), cfg)
        for name, arr in tensors.items():
            group, _, key = name.partition(".")
            layer = {"emb": model.emb, "hidden": model.hidden, "out": model.out}.get(group)
            if group == "conv":
                layer = model.conv
            if group == "lstm":
                sub, key = key.split(".", 1)
                layer = model.lstm.fw if sub == "fw" else model.lstm.bw
            layer.params[key] = arr
        return model


class IntentBaseline:
    """Multinomial logistic regression on bag-of-words + handcrafted features.

    Exactly permutation-invariant in the query tokens by construction."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self.W = np.zeros((len(vocab) + N_FEATURES, len(INTENT_CLASSES)))
        self.b = np.zeros(len(INTENT_CLASSES))

    def _logits(self, ids: list[int], feats: np.ndarray) -> np.ndarray:
        z = self.b.copy()
        for i in ids:
            z += self.W[i]
        z += feats @ self.W[len(self.vocab):]
        return z

    def predict(self, q: TokenSequence, feats: np.ndarray) -> np.ndarray:
        return softmax(self._logits(list(q.ids), feats))


def _prepare(data: list[tuple[str, str]], vocab: Vocabulary,
             lexicons: dict[str, Lexicon]) -> list[tuple[list[int], np.ndarray, int]]:
    out = []
    class_id = {c: i for i, c in enumerate(INTENT_CLASSES)}
    for query, vertical in data:
        if vertical not in class_id:
            raise InputError(f"unknown vertical label {vertical!r}")
        q = TokenSequence.from_text(query, vocab)
        out.append((list(q.ids), featurize_intent(q, lexicons), class_id[vertical]))
    return out


def train_intent(data: list[tuple[str, str]], vocab: Vocabulary,
                 lexicons: dict[str, Lexicon], cfg: IntentConfig = IntentConfig()
                 ) -> IntentModel:
    if not data:
        raise InputError("no training data")
    rng = np.random.default_rng(cfg.seed)
    model = IntentModel(vocab, cfg, rng)
    examples = _prepare(data, vocab, lexicons)
    opt = Adam(lr=cfg.lr)
    idx = np.arange(len(examples))
    for _ in range(cfg.epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [examples[i] for i in idx[lo:lo + cfg.batch_size]]
            _, grads = model.loss_and_grads(batch)
            opt.step(model.params(), grads)
    return model


def train_intent_baseline(data: list[tuple[str, str]], vocab: Vocabulary,
                          lexicons: dict[str, Lexicon], epochs: int = 6,
                          lr: float = 0.05, seed: int = 7) -> IntentBaseline:
    if not data:
        raise InputError("no training data")
    rng = np.random.default_rng(seed)
    model = IntentBaseline(vocab)
    examples = _prepare(data, vocab, lexicons)
    opt = Adam(lr=lr)
    params = {"W": model.W, "b": model.b}
    idx = np.arange(len(examples))
    v = len(vocab)
    for _ in range(epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), 32):
            gw = np.zeros_like(model.W)
            gb = np.zeros_like(model.b)
            batch = idx[lo:lo + 32]
            for i in batch:
                ids, feats, label = examples[i]
                _, probs = softmax_cross_entropy(model._logits(ids, feats), label)
                d = softmax_cross_entropy_grad(probs, label)
                gb += d
                for tid in ids:
                    gw[tid] += d
                gw[v:] += np.outer(feats, d)
            opt.step(params, {"W": gw / len(batch), "b": gb / len(batch)})
    return model


def accuracy(model, data: list[tuple[str, str]], vocab: Vocabulary,
             lexicons: dict[str, Lexicon]) -> float:
    class_id = {c: i for i, c in enumerate(INTENT_CLASSES)}
    correct = 0
    for query, vertical in data:
        q = TokenSequence.from_text(query, vocab)
        probs = model.predict(q, featurize_intent(q, lexicons))
        if int(np.argmax(probs)) == class_id[vertical]:
            correct += 1
    return correct / len(data)
