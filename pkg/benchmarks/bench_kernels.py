"""Compare the compiled kernel backend against the pure-numpy fallback.

Covers the serve-time hot loops (LSTM sequence forward, CRF/SCRF partition
and decode) at tagger- and LM-like sizes. Run:

    python benchmarks/bench_kernels.py

The pure backend can also be forced process-wide with VSEARCH_PURE_KERNELS=1
to benchmark any higher-level workload on the fallback.
"""

import time

import numpy as np

from vsearch import kernels
from vsearch.kernels import pure


def _time(fn, *args, repeat: int = 200) -> float:
    fn(*args)  # warm
    t0 = time.perf_counter_ns()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter_ns() - t0) / repeat / 1000.0  # us


def main() -> None:
    if kernels.BACKEND != "fastcore":
        print("compiled backend not built; nothing to compare against")
        return
    rng = np.random.default_rng(0)
    cases = []

    for t, h, d in ((6, 100, 100), (12, 100, 100), (6, 50, 50)):
        x = rng.normal(size=(t, d))
        wx = rng.normal(size=(d, 4 * h)) * 0.1
        wh = rng.normal(size=(h, 4 * h)) * 0.1
        b = rng.normal(size=4 * h) * 0.1
        cases.append((f"lstm_forward T={t} d={d} h={h}",
                      (kernels.lstm_forward, pure.lstm_forward), (x, wx, wh, b)))

    for t, y in ((5, 15), (10, 15)):
        em = rng.normal(size=(t, y))
        tr = rng.normal(size=(y, y))
        cases.append((f"crf_logz T={t} Y={y}",
                      (kernels.crf_logz, pure.crf_logz), (em, tr)))
        cases.append((f"crf_viterbi T={t} Y={y}",
                      (kernels.crf_viterbi, pure.crf_viterbi), (em, tr)))

    for t, l, y in ((5, 4, 8), (10, 4, 8)):
        seg = rng.normal(size=(t, l, y))
        tr = rng.normal(size=(y, y))
        cases.append((f"scrf_logz T={t} L={l} Y={y}",
                      (kernels.scrf_logz, pure.scrf_logz), (seg, tr)))
        cases.append((f"scrf_viterbi T={t} L={l} Y={y}",
                      (kernels.scrf_viterbi, pure.scrf_viterbi), (seg, tr)))

    print(f"{'kernel':36s} {'fastcore':>10s} {'pure':>10s} {'speedup':>8s}")
    for name, (fast, fallback), args in cases:
        t_fast = _time(fast, *args)
        t_pure = _time(fallback, *args)
        print(f"{name:36s} {t_fast:8.1f}us {t_pure:8.1f}us {t_pure / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
