# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the serve-time hot loops.

Must stay behaviour-identical to vsearch.kernels.pure: same recurrences,
same tie-breaks (first occurrence, i.e. lowest id; shortest segment first).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, tanh

cnp.import_array()

cdef extern from "math.h":
    double INFINITY

cdef inline double _sig(double v) nogil:
    if v >= 0:
        return 1.0 / (1.0 + exp(-v))
    cdef double e = exp(v)
    return e / (1.0 + e)


def lstm_forward(object x, object wx, object wh, object b):
    xw_arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64) @ np.asarray(wx, dtype=np.float64)
                                  + np.asarray(b, dtype=np.float64))
    cdef double[:, ::1] xw = xw_arr
    cdef double[:, ::1] whv = np.ascontiguousarray(wh, dtype=np.float64)
    cdef Py_ssize_t t = xw.shape[0]
    cdef Py_ssize_t h = whv.shape[0]
    out_arr = np.empty((t, h), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    a_arr = np.empty(4 * h, dtype=np.float64)
    cdef double[::1] a = a_arr
    c_arr = np.zeros(h, dtype=np.float64)
    cdef double[::1] c = c_arr
    hp_arr = np.zeros(h, dtype=np.float64)
    cdef double[::1] hp = hp_arr
    cdef Py_ssize_t s, j, k
    cdef double acc, ig, fg, gg, og
    for s in range(t):
        for k in range(4 * h):
            acc = xw[s, k]
            for j in range(h):
                acc += hp[j] * whv[j, k]
            a[k] = acc
        for j in range(h):
            ig = _sig(a[j])
            fg = _sig(a[h + j])
            gg = tanh(a[2 * h + j])
            og = _sig(a[3 * h + j])
            c[j] = fg * c[j] + ig * gg
            hp[j] = og * tanh(c[j])
            out[s, j] = hp[j]
    return out_arr


cdef double _logsumexp(double[::1] v) nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef double mx = -INFINITY
    cdef Py_ssize_t i
    for i in range(n):
        if v[i] > mx:
            mx = v[i]
    if mx == -INFINITY:
        return -INFINITY
    cdef double s = 0.0
    for i in range(n):
        s += exp(v[i] - mx)
    return mx + log(s)


def crf_logz(object emissions, object trans):
    cdef double[:, ::1] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(trans, dtype=np.float64)
    cdef Py_ssize_t t = em.shape[0]
    cdef Py_ssize_t ny = em.shape[1]
    alpha_arr = np.array(emissions[0], dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    nxt_arr = np.empty(ny, dtype=np.float64)
    cdef double[::1] nxt = nxt_arr
    tmp_arr = np.empty(ny, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t s, y, yp
    for s in range(1, t):
        for y in range(ny):
            for yp in range(ny):
                tmp[yp] = alpha[yp] + tr[yp, y]
            nxt[y] = em[s, y] + _logsumexp(tmp)
        alpha[:] = nxt
    return _logsumexp(alpha)


def crf_viterbi(object emissions, object trans):
    cdef double[:, ::1] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(trans, dtype=np.float64)
    cdef Py_ssize_t t = em.shape[0]
    cdef Py_ssize_t ny = em.shape[1]
    alpha_arr = np.array(emissions[0], dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    nxt_arr = np.empty(ny, dtype=np.float64)
    cdef double[::1] nxt = nxt_arr
    back_arr = np.zeros((t, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] back = back_arr
    path_arr = np.zeros(t, dtype=np.int64)
    cdef cnp.int64_t[::1] path = path_arr
    cdef Py_ssize_t s, y, yp, arg
    cdef double best, v
    for s in range(1, t):
        for y in range(ny):
            best = -INFINITY
            arg = 0
            for yp in range(ny):
                v = alpha[yp] + tr[yp, y]
                if v > best:
                    best = v
                    arg = yp
            back[s, y] = arg
            nxt[y] = em[s, y] + best
        alpha[:] = nxt
    best = -INFINITY
    arg = 0
    for y in range(ny):
        if alpha[y] > best:
            best = alpha[y]
            arg = y
    path[t - 1] = arg
    for s in range(t - 1, 0, -1):
        path[s - 1] = back[s, path[s]]
    return path_arr


def scrf_logz(object seg_scores, object trans):
    cdef double[:, :, ::1] seg = np.ascontiguousarray(seg_scores, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(trans, dtype=np.float64)
    cdef Py_ssize_t t = seg.shape[0]
    cdef Py_ssize_t max_l = seg.shape[1]
    cdef Py_ssize_t ny = seg.shape[2]
    alpha_arr = np.full((t + 1, ny), -np.inf)
    cdef double[:, ::1] alpha = alpha_arr
    buf_arr = np.empty(max_l * (ny + 1), dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t j, l, i, y, yp, n
    for j in range(1, t + 1):
        for y in range(ny):
            n = 0
            for l in range(1, min(max_l, j) + 1):
                i = j - l
                if i == 0:
                    buf[n] = seg[i, l - 1, y]
                    n += 1
                else:
                    for yp in range(ny):
                        buf[n] = alpha[i, yp] + tr[yp, y] + seg[i, l - 1, y]
                        n += 1
            alpha[j, y] = _logsumexp(buf[:n])
    return _logsumexp(alpha[t])


def scrf_viterbi(object seg_scores, object trans):
    cdef double[:, :, ::1] seg = np.ascontiguousarray(seg_scores, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(trans, dtype=np.float64)
    cdef Py_ssize_t t = seg.shape[0]
    cdef Py_ssize_t max_l = seg.shape[1]
    cdef Py_ssize_t ny = seg.shape[2]
    alpha_arr = np.full((t + 1, ny), -np.inf)
    cdef double[:, ::1] alpha = alpha_arr
    blen_arr = np.zeros((t + 1, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] blen = blen_arr
    bprev_arr = np.zeros((t + 1, ny), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] bprev = bprev_arr
    cdef Py_ssize_t j, l, i, y, yp
    cdef double best, v
    cdef Py_ssize_t arg_l, arg_p
    for j in range(1, t + 1):
        for y in range(ny):
            best = -INFINITY
            arg_l = 0
            arg_p = -1
            for l in range(1, min(max_l, j) + 1):
                i = j - l
                if i == 0:
                    v = seg[i, l - 1, y]
                    if v > best:
                        best = v
                        arg_l = l
                        arg_p = -1
                else:
                    for yp in range(ny):
                        v = alpha[i, yp] + tr[yp, y] + seg[i, l - 1, y]
                        if v > best:
                            best = v
                            arg_l = l
                            arg_p = yp
            alpha[j, y] = best
            blen[j, y] = arg_l
            bprev[j, y] = arg_p
    best = -INFINITY
    cdef Py_ssize_t yy = 0
    for y in range(ny):
        if alpha[t, y] > best:
            best = alpha[t, y]
            yy = y
    segments = []
    j = t
    while j > 0:
        l = blen[j, yy]
        segments.append((j - l, j, yy))
        yp = bprev[j, yy]
        j -= l
        yy = yp
    segments.reverse()
    return segments
