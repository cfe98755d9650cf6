"""Pure-numpy reference kernels.

These mirror vsearch.kernels._fastcore exactly (same recurrences, same
tie-breaks) and are the fallback when the compiled extension is missing.
Tie-breaks everywhere: first occurrence wins, i.e. lowest label/type id,
and for segment lattices shortest segment first, then lowest previous type.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hidden states of a zero-initialized LSTM over x (T, d) -> (T, h).

    Gate packing along the last axis: input, forget, candidate, output.
    """
    t = x.shape[0]
    h = wh.shape[0]
    out = np.empty((t, h))
    xw = x @ wx + b
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    for s in range(t):
        a = xw[s] + h_prev @ wh
        i = _sigmoid(a[:h])
        f = _sigmoid(a[h:2 * h])
        g = np.tanh(a[2 * h:3 * h])
        o = _sigmoid(a[3 * h:])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        out[s] = h_prev
    return out


def _logsumexp_rows(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=0)
    finite = np.isfinite(mx)
    out = np.full(m.shape[1], NEG_INF)
    if finite.any():
        out[finite] = mx[finite] + np.log(np.exp(m[:, finite] - mx[finite]).sum(axis=0))
    return out


def crf_logz(emissions: np.ndarray, trans: np.ndarray) -> float:
    """Log-partition of a linear chain: sum over all label sequences of
    exp(sum_t em[t, y_t] + sum_t trans[y_{t-1}, y_t])."""
    alpha = emissions[0].astype(np.float64)
    for t in range(1, emissions.shape[0]):
        alpha = emissions[t] + _logsumexp_rows(alpha[:, None] + trans)
    mx = alpha.max()
    return float(mx + np.log(np.exp(alpha - mx).sum()))


def crf_viterbi(emissions: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Argmax label sequence; ties resolved to the lowest label id."""
    t, y = emissions.shape
    alpha = emissions[0].astype(np.float64)
    back = np.zeros((t, y), dtype=np.int64)
    for s in range(1, t):
        scores = alpha[:, None] + trans
        back[s] = np.argmax(scores, axis=0)
        alpha = emissions[s] + scores[back[s], np.arange(y)]
    path = np.zeros(t, dtype=np.int64)
    path[-1] = int(np.argmax(alpha))
    for s in range(t - 1, 0, -1):
        path[s - 1] = back[s, path[s]]
    return path


def scrf_logz(seg_scores: np.ndarray, trans: np.ndarray) -> float:
    """Log-partition over segmentations.

    seg_scores[i, l, y] scores the segment [i, i+l+1) with type y; illegal
    cells hold -inf. trans[y_prev, y] scores adjacent segment types.
    """
    t, max_l, y = seg_scores.shape
    alpha = np.full((t + 1, y), NEG_INF)
    for j in range(1, t + 1):
        cands = []
        for l in range(1, min(max_l, j) + 1):
            i = j - l
            seg = seg_scores[i, l - 1]
            if i == 0:
                cands.append(seg[None, :].repeat(1, axis=0))
            else:
                cands.append(alpha[i][:, None] + trans + seg)
        stacked = np.vstack(cands)
        alpha[j] = _logsumexp_rows(stacked)
    mx = alpha[t].max()
    if not np.isfinite(mx):
        return NEG_INF
    return float(mx + np.log(np.exp(alpha[t] - mx).sum()))


def scrf_viterbi(seg_scores: np.ndarray, trans: np.ndarray) -> list[tuple[int, int, int]]:
    """Argmax segmentation as (start, end, type) triples covering [0, T).

    Ties: shortest candidate segment first, then lowest previous type,
    then lowest final type.
    """
    t, max_l, y = seg_scores.shape
    alpha = np.full((t + 1, y), NEG_INF)
    best_len = np.zeros((t + 1, y), dtype=np.int64)
    best_prev = np.zeros((t + 1, y), dtype=np.int64)
    for j in range(1, t + 1):
        cands = []
        meta = []
        for l in range(1, min(max_l, j) + 1):
            i = j - l
            seg = seg_scores[i, l - 1]
            if i == 0:
                cands.append(seg[None, :])
                meta.append((l, np.array([-1])))
            else:
                cands.append(alpha[i][:, None] + trans + seg)
                meta.append((l, np.arange(y)))
        stacked = np.vstack(cands)
        pick = np.argmax(stacked, axis=0)
        alpha[j] = stacked[pick, np.arange(y)]
        row = 0
        for l, prevs in meta:
            n = len(prevs)
            sel = (pick >= row) & (pick < row + n)
            best_len[j, sel] = l
            best_prev[j, sel] = prevs[pick[sel] - row]
            row += n
    segments: list[tuple[int, int, int]] = []
    j = t
    yy = int(np.argmax(alpha[t]))
    while j > 0:
        l = int(best_len[j, yy])
        segments.append((j - l, j, yy))
        prev = int(best_prev[j, yy])
        j -= l
        yy = prev
    segments.reverse()
    return segments
