"""Finite-difference gradient checking.

Works with any model exposing a parameter dict plus a closure that returns
(loss, grads) at the current parameter values. Central differences with step
1e-4 in double precision; relative error per checked entry is
|analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class GradientCheckReport:
    max_rel_error: float
    n_checked: int

    def ok(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error <= tol


def gradient_check(
    loss_and_grads: Callable[[], tuple[float, dict[str, np.ndarray]]],
    params: dict[str, np.ndarray],
    n_samples: int = 120,
    step: float = 1e-4,
    rng: np.random.Generator | None = None,
) -> GradientCheckReport:
    if rng is None:
        rng = np.random.default_rng(0)
    _, grads = loss_and_grads()

    entries = []
    names = sorted(params)
    sizes = np.array([params[n].size for n in names], dtype=np.int64)
    total = int(sizes.sum())
    n = min(n_samples, total)
    flat_picks = rng.choice(total, size=n, replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    for pick in flat_picks:
        which = int(np.searchsorted(offsets, pick, side="right") - 1)
        entries.append((names[which], int(pick - offsets[which])))

    max_rel = 0.0
    for name, idx in entries:
        flat = params[name].reshape(-1)
        orig = flat[idx]
        flat[idx] = orig + step
        lo_plus, _ = loss_and_grads()
        flat[idx] = orig - step
        lo_minus, _ = loss_and_grads()
        flat[idx] = orig
        numeric = (lo_plus - lo_minus) / (2.0 * step)
        analytic = float(grads[name].reshape(-1)[idx])
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        max_rel = max(max_rel, rel)
    return GradientCheckReport(max_rel_error=max_rel, n_checked=len(entries))
