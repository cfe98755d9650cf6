"""Kernel backend selection.

The compiled extension (`_fastcore`, Cython) is used when it imported
cleanly; otherwise the pure-numpy twin in `pure` takes over. Set
VSEARCH_PURE_KERNELS=1 to force the fallback, e.g. when benchmarking the
two backends against each other (benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

from vsearch.kernels import pure

_impl = pure
BACKEND = "pure"

if os.environ.get("VSEARCH_PURE_KERNELS") != "1":
    try:
        from vsearch.kernels import _fastcore as _impl  # type: ignore[no-redef]

        BACKEND = "fastcore"
    except ImportError:
        pass

lstm_forward = _impl.lstm_forward
crf_logz = _impl.crf_logz
crf_viterbi = _impl.crf_viterbi
scrf_logz = _impl.scrf_logz
scrf_viterbi = _impl.scrf_viterbi

__all__ = [
    "BACKEND",
    "crf_logz",
    "crf_viterbi",
    "lstm_forward",
    "pure",
    "scrf_logz",
    "scrf_viterbi",
]
