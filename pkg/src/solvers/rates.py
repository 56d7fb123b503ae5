"""Empirical order of convergence of a loss history."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np


def convergence_rate(loss_history: Sequence[float], window: Optional[int] = None) -> Optional[float]:
    """
    Mean empirical order of convergence.

    Every run of four consecutive losses gives

        q = log|(f3 - f2) / (f2 - f1)| / log|(f2 - f1) / (f1 - f0)|

    Windows with a zero or non-finite difference, or a zero denominator, are
    skipped. ``window`` keeps only the last ``window`` valid estimates.

    Returns
    -------
    Optional[float]
        The mean q, or ``None`` when no window is valid.
    """
    f = np.asarray(loss_history, dtype=np.float64)
    if f.size < 4:
        return None
    diffs = np.diff(f)
    rates = []
    for t in range(diffs.size - 2):
        d0, d1, d2 = diffs[t], diffs[t + 1], diffs[t + 2]
        if not (np.isfinite([d0, d1, d2]).all() and d0 and d1 and d2):
            continue
        denominator = math.log(abs(d1 / d0))
        if denominator == 0.0 or not math.isfinite(denominator):
            continue
        q = math.log(abs(d2 / d1)) / denominator
        if math.isfinite(q):
            rates.append(q)
    if window is not None:
        rates = rates[-window:] if window > 0 else []
    if not rates:
        return None
    return float(np.mean(rates))
