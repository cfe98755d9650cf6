"""Query suggestion seq2seq: 2-layer LSTM encoder/decoder, beam search.

No attention; the decoder starts from the encoder's final states. Training
is teacher-forced cross-entropy and, by default, refuses training sets that
still contain generalization pairs (target a strict subsequence of the
source) since those teach the decoder to delete words.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vsearch.errors import InputError, TrainingDivergedError
from vsearch.nn import LSTM, Adam, Dense, Embedding, load_checkpoint, save_checkpoint
from vsearch.nn.losses import log_softmax, logsumexp
from vsearch.synth.mining import is_strict_subsequence
from vsearch.textprep import PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN, Vocabulary, tokenize

BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True)
class Seq2SeqConfig:
    embed_dim: int = 100
    hidden: int = 100
    vocab_size: int = 100_000
    epochs: int = 10
    lr: float = 0.002
    batch_size: int = 16
    seed: int = 17
    require_filtered: bool = True
    max_len: int = 8
    beam_width: int = 8


def build_seq2seq_vocab(pairs: list[tuple[str, str]], max_size: int) -> Vocabulary:
    counts: dict[str, int] = {}
    for src, tgt in pairs:
        for t in tokenize(src) + tokenize(tgt):
            counts[t] = counts.get(t, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [t for t, _ in ranked[: max(0, max_size - 4)]]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN, BOS, EOS] + keep)


@dataclass(frozen=True)
class BeamHypothesis:
    token_ids: tuple[int, ...]
    log_prob: float
    finished: bool


class Seq2SeqModel:
    """Two stacked LSTMs on each side; decoder consumes the encoder's final
    (h, c) per layer. One vocabulary, separate embedding tables."""

    def __init__(self, vocab: Vocabulary, cfg: Seq2SeqConfig,
                 rng: np.random.Generator | None = None):
        self.vocab = vocab
        self.cfg = cfg
        rng = rng or np.random.default_rng(cfg.seed)
        d, h = cfg.embed_dim, cfg.hidden
        self.enc_emb = Embedding(len(vocab), d, rng)
        self.dec_emb = Embedding(len(vocab), d, rng)
        self.enc1 = LSTM(d, h, rng)
        self.enc2 = LSTM(h, h, rng)
        self.dec1 = LSTM(d, h, rng)
        self.dec2 = LSTM(h, h, rng)
        self.out = Dense(h, len(vocab), rng)
        self.bos = vocab.id(BOS)
        self.eos = vocab.id(EOS)

    def _layers(self):
        return {"enc_emb": self.enc_emb, "dec_emb": self.dec_emb,
                "enc1": self.enc1, "enc2": self.enc2,
                "dec1": self.dec1, "dec2": self.dec2, "out": self.out}

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._layers().items():
            for k, v in layer.params.items():
                out[f"{name}.{k}"] = v
        return out

    def grads(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._layers().items():
            for k, v in layer.grads.items():
                out[f"{name}.{k}"] = v
        return out

    def zero_grads(self) -> None:
        for layer in self._layers().values():
            layer.zero_grads()

    def encode_ids(self, text: str) -> list[int]:
        return [self.vocab.id(t) for t in tokenize(text)]

    # -- training -----------------------------------------------------------

    def loss_and_grads(self, batch: list[tuple[list[int], list[int]]]
                       ) -> tuple[float, dict[str, np.ndarray]]:
        self.zero_grads()
        total = 0.0
        positions = 0
        for src_ids, tgt_ids in batch:
            loss, n = self._train_example(src_ids, tgt_ids)
            total += loss
            positions += n
        positions = max(positions, 1)
        return total / positions, {k: g / positions for k, g in self.grads().items()}

    def _train_example(self, src_ids: list[int], tgt_ids: list[int]) -> tuple[float, int]:
        x = self.enc_emb.forward(src_ids)
        h1 = self.enc1.forward(x)
        self.enc2.forward(h1)
        s1 = self.enc1.final_state()
        s2 = self.enc2.final_state()

        dec_in = [self.bos] + tgt_ids
        targets = np.asarray(tgt_ids + [self.eos], dtype=np.int64)
        xd = self.dec_emb.forward(dec_in)
        d1 = self.dec1.forward(xd, h0=s1[0], c0=s1[1])
        d2 = self.dec2.forward(d1, h0=s2[0], c0=s2[1])
        logits = self.out.forward(d2)
        logz = logsumexp(logits, axis=1)
        t_len = len(targets)
        loss = float((logz - logits[np.arange(t_len), targets]).sum())

        dlogits = np.exp(logits - logz[:, None])
        dlogits[np.arange(t_len), targets] -= 1.0
        dd2 = self.out.backward(dlogits)
        dd1 = self.dec2.backward(dd2)
        dxd = self.dec1.backward(dd1)
        self.dec_emb.backward(dxd)
        # encoder sees gradient only through its final states
        dh1 = self.enc2.backward(np.zeros((len(src_ids), self.cfg.hidden)),
                                 dh_last=self.dec2.d_h0, dc_last=self.dec2.d_c0)
        dx = self.enc1.backward(dh1, dh_last=self.dec1.d_h0, dc_last=self.dec1.d_c0)
        self.enc_emb.backward(dx)
        return loss, t_len

    # -- decoding -------------------------------------------------------------

    def _encoder_states(self, src_ids: list[int]):
        x = self.enc_emb.params["table"][np.asarray(src_ids, dtype=np.int64)]
        h1 = self.enc1.forward(x)
        self.enc2.forward(h1)
        return self.enc1.final_state(), self.enc2.final_state()

    def _step(self, token_id: int, states):
        (h1, c1), (h2, c2) = states
        x = self.dec_emb.params["table"][token_id]
        h1n, c1n = self.dec1.step(x, (h1, c1))
        h2n, c2n = self.dec2.step(h1n, (h2, c2))
        logits = self.out.forward(h2n)
        return log_softmax(logits), ((h1n, c1n), (h2n, c2n))

    def sequence_log_prob(self, src_text: str, tgt_tokens: list[str]) -> float:
        """Teacher-forced log-probability of tgt_tokens followed by EOS."""
        src_ids = self.encode_ids(src_text)
        if not src_ids:
            src_ids = [UNK_ID]
        states = self._encoder_states(src_ids)
        total = 0.0
        prev = self.bos
        for t in list(tgt_tokens) + [EOS]:
            tid = self.vocab.id(t)
            logp, states = self._step(prev, states)
            total += float(logp[tid])
            prev = tid
        return total

    def beam_decode(self, src_text: str, beam: int | None = None,
                    max_len: int | None = None, k: int | None = None,
                    length_normalize: bool = False,
                    dedupe_source: bool = True) -> list[tuple[str, float]]:
        """Length-capped beam search; always returns at least one suggestion."""
        beam = beam or self.cfg.beam_width
        max_len = max_len or self.cfg.max_len
        k = k or beam
        src_ids = self.encode_ids(src_text)
        if not src_ids:
            src_ids = [UNK_ID]
        init_states = self._encoder_states(src_ids)
        # PAD, UNK and BOS are never generated
        banned = {PAD_ID, UNK_ID, self.bos}
        live: list[tuple[float, tuple[int, ...], object]] = [(0.0, (), init_states)]
        finished: list[BeamHypothesis] = []
        for _ in range(max_len):
            expansions: list[tuple[float, tuple[int, ...], object]] = []
            for score, toks, states in live:
                prev = toks[-1] if toks else self.bos
                logp, nstates = self._step(prev, states)
                order = np.argsort(-logp)
                taken = 0
                for tid in order:
                    tid = int(tid)
                    if tid in banned:
                        continue
                    ns = score + float(logp[tid])
                    if tid == self.eos:
                        finished.append(BeamHypothesis(toks, ns, True))
                    else:
                        expansions.append((ns, toks + (tid,), nstates))
                    taken += 1
                    if taken >= beam + 1:
                        break
            expansions.sort(key=lambda e: (-e[0], e[1]))
            live = expansions[:beam]
            if not live:
                break
        for score, toks, states in live:
            # length-capped: close the hypothesis with its end-marker term so
            # every score is a complete teacher-forced sequence log-probability
            logp, _ = self._step(toks[-1] if toks else self.bos, states)
            finished.append(BeamHypothesis(toks, score + float(logp[self.eos]), False))
        texts: dict[str, BeamHypothesis] = {}
        for hyp in finished:
            text = " ".join(self.vocab.token(t) for t in hyp.token_ids)
            denom = max(len(hyp.token_ids) + 1, 1)
            adj = hyp.log_prob / denom if length_normalize else hyp.log_prob
            if text not in texts or adj > texts[text][0]:
                texts[text] = (adj, hyp)
        ranked = sorted(((s, t) for t, (s, _) in texts.items()),
                        key=lambda x: (-x[0], x[1]))
        out = [(t, s) for s, t in ranked if t]
        if dedupe_source:
            src_norm = " ".join(tokenize(src_text))
            deduped = [(t, s) for t, s in out if t != src_norm]
            if deduped:  # a suggestion equal to the input is useless, but
                out = deduped  # coverage still wins over dedupe
        if not out:
            out = [(UNK_TOKEN, 0.0)]
        return out[:k]

    # -- persistence ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, "seq2seq", self.params())
        meta = {"vocab": self.vocab._id_to_token}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Seq2SeqModel":
        kind, tensors = load_checkpoint(path)
        if kind != "seq2seq":
            raise InputError(f"checkpoint kind {kind!r}, expected seq2seq")
        meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="utf-8"))
        vocab = Vocabulary(meta["vocab"])
        cfg = Seq2SeqConfig(embed_dim=tensors["enc_emb.table"].shape[1],
                            hidden=tensors["enc1.Wh"].shape[0])
        model = cls(vocab, cfg)
        for name, layer in model._layers().items():
            for key in list(layer.params):
                layer.params[key] = tensors[f"{name}.{key}"]
        return model


def train_seq2seq(pairs: list[tuple[str, str]],
                  cfg: Seq2SeqConfig = Seq2SeqConfig()) -> Seq2SeqModel:
    if not pairs:
        raise InputError("no training pairs")
    if cfg.require_filtered:
        for src, tgt in pairs:
            if is_strict_subsequence(tokenize(tgt), tokenize(src)):
                raise InputError(
                    f"generalization pair in training data: {src!r} -> {tgt!r}; "
                    "run filter_generalization_pairs or set require_filtered=False")
    rng = np.random.default_rng(cfg.seed)
    vocab = build_seq2seq_vocab(pairs, cfg.vocab_size)
    model = Seq2SeqModel(vocab, cfg, rng)
    encoded = [([vocab.id(t) for t in tokenize(s)] or [UNK_ID],
                [vocab.id(t) for t in tokenize(g)] or [UNK_ID])
               for s, g in pairs]
    opt = Adam(lr=cfg.lr)
    idx = np.arange(len(encoded))
    for _ in range(cfg.epochs):
        rng.shuffle(idx)
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [encoded[i] for i in idx[lo:lo + cfg.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"seq2seq loss became {loss}")
            opt.step(model.params(), grads)
    return model
