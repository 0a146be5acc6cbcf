"""Training-load bookkeeping: TRIMP, CTL, ATL, TSB, and the safety rules.

TRIMP weights zone minutes by the Lucia coefficients (low 1, medium 2,
high 3). CTL and ATL are plain trailing means of daily TRIMP over 42
and 7 days; at the start of a series the windows shrink to the days
available instead of zero-padding, which keeps TSB flat during
onboarding. TSB is CTL - ATL, bit-exact in every emitted state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import Mapping, Sequence, Union

from . import kernels

LUCIA_COEFFICIENTS = (1.0, 2.0, 3.0)
CTL_WINDOW_DAYS = 42
ATL_WINDOW_DAYS = 7

# Readiness zones over TSB, half-open from above:
#   >= +10 transition, [+5, +10) fresh, [-5, +5) neutral,
#   [-30, -5) optimal, < -30 overload.
TSB_TRANSITION = 10.0
TSB_FRESH = 5.0
TSB_NEUTRAL = -5.0
TSB_OPTIMAL = -30.0


class TsbZone(Enum):
    TRANSITION = "transition"
    FRESH = "fresh"
    NEUTRAL = "neutral"
    OPTIMAL = "optimal"
    OVERLOAD = "overload"


@dataclass(frozen=True)
class Workout:
    """Zone minutes actually performed on one day."""

    day: date
    zone_minutes: tuple[float, float, float]  # (low, medium, high)

    def __post_init__(self):
        if any(not math.isfinite(m) or m < 0 for m in self.zone_minutes):
            raise ValueError(f"zone minutes must be finite and non-negative: {self.zone_minutes}")
        if sum(self.zone_minutes) > 1440:
            raise ValueError("zone minutes exceed one day")


@dataclass(frozen=True)
class TrainingLoadState:
    day: date
    trimp_day: float
    ctl: float
    atl: float
    tsb: float


@dataclass(frozen=True)
class RampCheck:
    ok: bool
    cold_start: bool

    def __bool__(self) -> bool:
        return self.ok


def trimp(workout: Workout, coefficients: Sequence[float] = LUCIA_COEFFICIENTS) -> float:
    """Zone minutes weighted by intensity coefficients."""
    low, med, high = workout.zone_minutes
    c1, c2, c3 = coefficients
    return low * c1 + med * c2 + high * c3


def trimp_of_zones(zone_minutes: Sequence[float], coefficients: Sequence[float] = LUCIA_COEFFICIENTS) -> float:
    low, med, high = zone_minutes
    c1, c2, c3 = coefficients
    return low * c1 + med * c2 + high * c3


DailySeries = Union[Sequence[tuple[date, float]], Mapping[date, float]]


def dense_daily_trimp(series: DailySeries, start: date | None = None, end: date | None = None) -> list[tuple[date, float]]:
    """Expand a possibly-sparse day->TRIMP mapping into a contiguous series.

    Missing days are rest days (0 TRIMP).
    """
    if isinstance(series, Mapping):
        items = dict(series)
    else:
        items = {d: v for d, v in series}
    if not items and (start is None or end is None):
        return []
    lo = start if start is not None else min(items)
    hi = end if end is not None else max(items)
    out = []
    d = lo
    while d <= hi:
        out.append((d, float(items.get(d, 0.0))))
        d += timedelta(days=1)
    return out


def update_loads(daily: DailySeries) -> list[TrainingLoadState]:
    """CTL/ATL/TSB states for a contiguous daily TRIMP history.

    Mappings are densified first (missing days count as 0). Sequences
    must already be contiguous and ordered.
    """
    if isinstance(daily, Mapping):
        daily = dense_daily_trimp(daily)
    days = [d for d, _ in daily]
    values = [v for _, v in daily]
    for a, b in zip(days, days[1:]):
        if b != a + timedelta(days=1):
            raise ValueError(f"daily series must be contiguous, gap after {a}")
    ctl = kernels.trailing_mean(values, CTL_WINDOW_DAYS)
    atl = kernels.trailing_mean(values, ATL_WINDOW_DAYS)
    return [
        TrainingLoadState(day=d, trimp_day=v, ctl=float(c), atl=float(a), tsb=float(c) - float(a))
        for d, v, c, a in zip(days, values, ctl, atl)
    ]


def tsb_zone(tsb: float) -> TsbZone:
    """Readiness zone for a TSB value; total over all finite inputs."""
    if not math.isfinite(tsb):
        raise ValueError(f"TSB must be finite, got {tsb}")
    if tsb >= TSB_TRANSITION:
        return TsbZone.TRANSITION
    if tsb >= TSB_FRESH:
        return TsbZone.FRESH
    if tsb >= TSB_NEUTRAL:
        return TsbZone.NEUTRAL
    if tsb >= TSB_OPTIMAL:
        return TsbZone.OPTIMAL
    return TsbZone.OVERLOAD


def ramp_ok(
    states: Sequence[TrainingLoadState], day: date, limit: float = 5.0
) -> RampCheck:
    """Weekly CTL ramp check at ``day``: ctl(day-1) - ctl(day-8) < limit.

    Histories too short to evaluate pass with the cold-start flag set.
    """
    by_day = {s.day: s.ctl for s in states}
    prev = by_day.get(day - timedelta(days=1))
    week_ago = by_day.get(day - timedelta(days=8))
    if prev is None or week_ago is None:
        return RampCheck(ok=True, cold_start=True)
    return RampCheck(ok=prev - week_ago < limit, cold_start=False)


def tsb_minus20_count(
    states: Sequence[TrainingLoadState],
    window_days: int = 10,
    threshold: float = -20.0,
) -> int:
    """Count distinct drops below the threshold within the trailing window.

    A drop is an entry event: a day below the threshold whose previous
    day (if any) was not. Long excursions count once, at their entry.
    """
    if not states:
        return 0
    window_start = states[-1].day - timedelta(days=window_days - 1)
    count = 0
    prev_below = False
    for s in states:
        below = s.tsb < threshold
        if below and not prev_below and s.day >= window_start:
            count += 1
        prev_below = below
    return count
