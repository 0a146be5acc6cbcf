"""Pure-Python reference kernels.

These mirror the compiled versions in ``_fast.pyx`` operation for
operation: identical loop order, identical accumulation, so both
backends produce bit-identical results. Keep the two files in sync.
"""

from __future__ import annotations

import math


def trailing_mean(values, window):
    """Trailing-window mean of ``values`` at every index.

    The window at index ``i`` covers ``values[max(0, i-window+1) : i+1]``;
    early indices use however many samples exist (no zero padding).
    """
    n = len(values)
    out = [0.0] * n
    for i in range(n):
        lo = i - window + 1
        if lo < 0:
            lo = 0
        s = 0.0
        for j in range(lo, i + 1):
            s += values[j]
        out[i] = s / (i + 1 - lo)
    return out


def impulse_response(doses, tau):
    """Exponentially-decayed sum of past doses, evaluated at every day.

    out[t] = sum_{s < t} doses[s] * exp(-(t - s) / tau); out[0] is 0.
    """
    n = len(doses)
    out = [0.0] * n
    for t in range(n):
        acc = 0.0
        for s in range(t):
            acc += doses[s] * math.exp(-(t - s) / tau)
        out[t] = acc
    return out


def impulse_value(doses, tau):
    """Decayed-dose sum evaluated one step past the end of ``doses``."""
    n = len(doses)
    acc = 0.0
    for s in range(n):
        acc += doses[s] * math.exp(-(n - s) / tau)
    return acc


def group_minutes(minutes, max_gap, min_len):
    """Group sorted minute indices into runs, bridging small gaps.

    Consecutive entries are in the same run when the gap between them
    is at most ``max_gap`` skipped minutes. Runs spanning fewer than
    ``min_len`` minutes (inclusive of bridged gaps) are dropped.
    Returns (start_minute, end_minute) pairs.
    """
    runs = []
    n = len(minutes)
    if n == 0:
        return runs
    start = minutes[0]
    prev = minutes[0]
    for i in range(1, n):
        m = minutes[i]
        if m - prev - 1 <= max_gap:
            prev = m
        else:
            if prev - start + 1 >= min_len:
                runs.append((int(start), int(prev)))
            start = m
            prev = m
    if prev - start + 1 >= min_len:
        runs.append((int(start), int(prev)))
    return runs
