"""Uniform deviation schedules e_z(N).

Both schedules are positive, non-increasing in the sample count, and vanish
as the count grows, which is all downstream code relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_count(n):
    arr = np.asarray(n)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise ValueError("sample count must be an integer")
    if np.any(arr < 1):
        raise ValueError("sample count must be >= 1")
    return arr.astype(np.float64)


@dataclass(frozen=True)
class HeuristicInverseSqrt:
    """Deviation c0 / sqrt(N) with a free exploration constant c0."""

    c0: float = 0.1

    def __post_init__(self) -> None:
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")

    def deviation(self, n):
        arr = _check_count(n)
        out = self.c0 / np.sqrt(arr)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VCEnvelope:
    """Uniform-deviation envelope for a class of VC dimension d_vc.

    e(N) = sqrt((d_vc * (ln(2N / d_vc) + 1) + ln(8 / delta)) / N), with the
    log argument clamped at 1 so the envelope stays positive and
    non-increasing for N below d_vc / 2.  Only the monotone shape and the
    sqrt(d/N) scaling are relied upon; the constants are a documented choice.
    """

    d_vc: float = 3.0
    delta: float = 0.05

    def __post_init__(self) -> None:
        if self.d_vc <= 0:
            raise ValueError("d_vc must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be a probability in (0, 1)")

    def deviation(self, n):
        arr = _check_count(n)
        log_term = np.log(np.maximum(2.0 * arr / self.d_vc, 1.0))
        val = (self.d_vc * (log_term + 1.0) + np.log(8.0 / self.delta)) / arr
        out = np.sqrt(val)
        return float(out) if out.ndim == 0 else out


BoundSchedule = HeuristicInverseSqrt | VCEnvelope


def deviation(schedule: BoundSchedule, n):
    """Evaluate a schedule at count n (scalar or array)."""
    return schedule.deviation(n)
