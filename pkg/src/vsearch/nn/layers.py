"""Dense layers with hand-derived backprop.

Everything runs in float64 on row-major numpy arrays. Each layer keeps its
parameters in ``self.params`` and accumulates gradients of the last backward
pass in ``self.grads``; both are dicts of arrays with matching shapes, so the
optimizer and the gradient checker can treat models uniformly.

Gate order inside LSTM weight matrices is (input, forget, candidate, output),
packed along the last axis.
"""

from __future__ import annotations

import numpy as np

from vsearch.errors import InputError


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float64)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable on both tails.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def zero_grads(self) -> None:
        for name, p in self.params.items():
            self.grads[name] = np.zeros_like(p)


class Embedding(Layer):
    """Token id -> row lookup. Gradient is a scatter-add over looked-up rows."""

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator | None = None):
        super().__init__()
        if rng is None:
            table = np.zeros((vocab_size, dim))
        else:
            table = glorot_uniform(rng, vocab_size, dim, (vocab_size, dim))
        self.params["table"] = table
        self.zero_grads()

    @property
    def vocab_size(self) -> int:
        return self.params["table"].shape[0]

    @property
    def dim(self) -> int:
        return self.params["table"].shape[1]

    def forward(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise InputError(f"token id out of range [0, {self.vocab_size})")
        self._ids = ids
        return self.params["table"][ids]

    def backward(self, dout: np.ndarray) -> None:
        np.add.at(self.grads["table"], self._ids, dout)


class Dense(Layer):
    """x @ W + b over a vector or a batch of row vectors."""

    def __init__(self, din: int, dout: int, rng: np.random.Generator | None = None):
        super().__init__()
        if rng is None:
            w = np.zeros((din, dout))
        else:
            w = glorot_uniform(rng, din, dout, (din, dout))
        self.params["W"] = w
        self.params["b"] = np.zeros(dout)
        self.zero_grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._x
        if x.ndim == 1:
            self.grads["W"] += np.outer(x, dout)
            self.grads["b"] += dout
        else:
            self.grads["W"] += x.T @ dout
            self.grads["b"] += dout.sum(axis=0)
        return dout @ self.params["W"].T


class Relu:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dout, 0.0)


def conv_maxpool_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, width: int
                         ) -> tuple[np.ndarray, tuple]:
    """Width-w conv + rectifier + max-over-positions for one (T, d) sequence.

    Returns (pooled (n_filters,), cache for the backward pass). The input
    must already be padded to at least `width` rows.
    """
    if x.shape[0] < width:
        raise InputError(f"need >= {width} rows after padding, got {x.shape[0]}")
    n = x.shape[0] - width + 1
    xw = np.stack([x[i:i + width].ravel() for i in range(n)])
    z = xw @ w + b
    a = np.maximum(z, 0.0)
    argmax = np.argmax(a, axis=0)
    pooled = a[argmax, np.arange(w.shape[1])]
    return pooled, (x.shape, xw, z, argmax, width)


def conv_maxpool_backward(dpooled: np.ndarray, cache: tuple, w: np.ndarray,
                          gw: np.ndarray, gb: np.ndarray) -> np.ndarray:
    """Accumulates filter grads into (gw, gb) and returns d(input)."""
    x_shape, xw, z, argmax, width = cache
    n_windows, n_filters = z.shape
    cols = np.arange(n_filters)
    dz = np.zeros((n_windows, n_filters))
    picked = z[argmax, cols]
    dz[argmax, cols] = np.where(picked > 0, dpooled, 0.0)
    gw += xw.T @ dz
    gb += dz.sum(axis=0)
    dxw = dz @ w.T
    dx = np.zeros(x_shape)
    in_dim = x_shape[1]
    for i in range(n_windows):
        dx[i:i + width] += dxw[i].reshape(width, in_dim)
    return dx


def conv_maxpool_batch(x: np.ndarray, w: np.ndarray, b: np.ndarray, width: int
                       ) -> np.ndarray:
    """Inference-only batched variant over (N, T, d) with equal-length rows.
    Works in the dtype of its inputs (the cached serve path passes f32)."""
    n, t, d = x.shape
    if t < width:
        raise InputError(f"need >= {width} columns, got {t}")
    windows = np.concatenate([x[:, i:t - width + 1 + i, :] for i in range(width)],
                             axis=2)
    a = np.maximum(windows.reshape(n, t - width + 1, width * d) @ w + b, 0.0)
    return a.max(axis=1)


class Conv1DMaxPool(Layer):
    """Layer wrapper around conv_maxpool_forward/backward for single-use
    architectures (the intent classifier)."""

    def __init__(self, in_dim: int, n_filters: int, width: int = 3,
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.width = width
        self.in_dim = in_dim
        self.n_filters = n_filters
        fan_in = width * in_dim
        if rng is None:
            w = np.zeros((fan_in, n_filters))
        else:
            w = glorot_uniform(rng, fan_in, n_filters, (fan_in, n_filters))
        self.params["W"] = w
        self.params["b"] = np.zeros(n_filters)
        self.zero_grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, self._cache = conv_maxpool_forward(x, self.params["W"], self.params["b"],
                                                self.width)
        return out

    def backward(self, dpooled: np.ndarray) -> np.ndarray:
        return conv_maxpool_backward(dpooled, self._cache, self.params["W"],
                                     self.grads["W"], self.grads["b"])


class LSTM(Layer):
    """Single-direction LSTM over a full sequence, zero initial state.

    forward() caches everything needed by backward(); step() runs one cell
    update without caching, for decode-time use.
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator | None = None):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = hidden
        if rng is None:
            wx = np.zeros((in_dim, 4 * hidden))
            wh = np.zeros((hidden, 4 * hidden))
        else:
            wx = glorot_uniform(rng, in_dim, 4 * hidden, (in_dim, 4 * hidden))
            wh = glorot_uniform(rng, hidden, 4 * hidden, (hidden, 4 * hidden))
        self.params["Wx"] = wx
        self.params["Wh"] = wh
        self.params["b"] = np.zeros(4 * hidden)
        self.zero_grads()

    def _gates(self, a: np.ndarray):
        h = self.hidden
        return (sigmoid(a[..., :h]), sigmoid(a[..., h:2 * h]),
                np.tanh(a[..., 2 * h:3 * h]), sigmoid(a[..., 3 * h:]))

    def step(self, x: np.ndarray, state: tuple[np.ndarray, np.ndarray]):
        h_prev, c_prev = state
        a = x @ self.params["Wx"] + h_prev @ self.params["Wh"] + self.params["b"]
        i, f, g, o = self._gates(a)
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        return h, c

    def forward(self, x: np.ndarray,
                h0: np.ndarray | None = None,
                c0: np.ndarray | None = None) -> np.ndarray:
        t = x.shape[0]
        h = self.hidden
        i_g = np.empty((t, h)); f_g = np.empty((t, h))
        g_g = np.empty((t, h)); o_g = np.empty((t, h))
        c_s = np.empty((t, h)); tc = np.empty((t, h))
        hs = np.empty((t, h))
        xw = x @ self.params["Wx"] + self.params["b"]
        h_prev = np.zeros(h) if h0 is None else h0
        c_prev = np.zeros(h) if c0 is None else c0
        h0_c = h_prev; c0_c = c_prev
        for s in range(t):
            a = xw[s] + h_prev @ self.params["Wh"]
            ii, ff, gg, oo = self._gates(a)
            cc = ff * c_prev + ii * gg
            tcc = np.tanh(cc)
            hh = oo * tcc
            i_g[s], f_g[s], g_g[s], o_g[s] = ii, ff, gg, oo
            c_s[s], tc[s], hs[s] = cc, tcc, hh
            h_prev, c_prev = hh, cc
        self._cache = (x, i_g, f_g, g_g, o_g, c_s, tc, hs, h0_c, c0_c)
        return hs

    def final_state(self) -> tuple[np.ndarray, np.ndarray]:
        c_s, hs = self._cache[5], self._cache[7]
        return hs[-1].copy(), c_s[-1].copy()

    def backward(self, dh_seq: np.ndarray,
                 dh_last: np.ndarray | None = None,
                 dc_last: np.ndarray | None = None) -> np.ndarray:
        """Backprop through the cached sequence. Gradients wrt the initial
        state land in self.d_h0 / self.d_c0 (used by the seq2seq decoder)."""
        x, i_g, f_g, g_g, o_g, c_s, tc, hs, h0, c0 = self._cache
        t = x.shape[0]
        dx = np.zeros_like(x)
        dh_next = np.zeros(self.hidden) if dh_last is None else dh_last.copy()
        dc_next = np.zeros(self.hidden) if dc_last is None else dc_last.copy()
        d_wx = self.grads["Wx"]; d_wh = self.grads["Wh"]; d_b = self.grads["b"]
        wx_t = self.params["Wx"].T
        wh_t = self.params["Wh"].T
        for s in range(t - 1, -1, -1):
            dh = dh_seq[s] + dh_next
            dc = dc_next + dh * o_g[s] * (1.0 - tc[s] ** 2)
            do = dh * tc[s]
            di = dc * g_g[s]
            dg = dc * i_g[s]
            c_prev = c_s[s - 1] if s > 0 else c0
            df = dc * c_prev
            da = np.concatenate([
                di * i_g[s] * (1.0 - i_g[s]),
                df * f_g[s] * (1.0 - f_g[s]),
                dg * (1.0 - g_g[s] ** 2),
                do * o_g[s] * (1.0 - o_g[s]),
            ])
            d_wx += np.outer(x[s], da)
            d_b += da
            h_prev = hs[s - 1] if s > 0 else h0
            d_wh += np.outer(h_prev, da)
            dx[s] = da @ wx_t
            dh_next = da @ wh_t
            dc_next = dc * f_g[s]
        self.d_h0 = dh_next
        self.d_c0 = dc_next
        return dx


class BiLSTM:
    """Forward and backward LSTM; per-position output is the concatenation."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator | None = None):
        self.fw = LSTM(in_dim, hidden, rng)
        self.bw = LSTM(in_dim, hidden, rng)
        self.hidden = hidden

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {f"fw.{k}": v for k, v in self.fw.params.items()}
        out.update({f"bw.{k}": v for k, v in self.bw.params.items()})
        return out

    @property
    def grads(self) -> dict[str, np.ndarray]:
        out = {f"fw.{k}": v for k, v in self.fw.grads.items()}
        out.update({f"bw.{k}": v for k, v in self.bw.grads.items()})
        return out

    def zero_grads(self) -> None:
        self.fw.zero_grads()
        self.bw.zero_grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        hf = self.fw.forward(x)
        hb = self.bw.forward(x[::-1])[::-1]
        return np.concatenate([hf, hb], axis=1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        h = self.hidden
        dxf = self.fw.backward(dout[:, :h])
        dxb = self.bw.backward(dout[::-1, h:])
        return dxf + dxb[::-1]
