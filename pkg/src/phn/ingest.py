"""Minute-level wearable stream ingestion.

Parses raw CSV streams into per-minute samples, screens them for
plausibility, segments exercise and sleep events, and rolls the result
up into weekly feature aggregates. Everything here is a pure
transformation: inputs in, immutable values out.

Input line format (one sample per line):

    ts_iso8601,hr_bpm,steps,activity_mode,sleep_stage

``hr_bpm`` may be empty when the sensor had no reading. Malformed lines
are collected in a rejects report instead of aborting the parse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import kernels

HR_MIN, HR_MAX = 25, 220          # plausible wearable heart-rate range, bpm
STEPS_MAX = 300                   # plausible steps in one minute
EXERCISE_MAX_GAP_MIN = 2          # gap bridged inside one exercise session
EXERCISE_MIN_DURATION_MIN = 5     # shorter runs are noise, not workouts
SLEEP_MAX_GAP_MIN = 30
SLEEP_MIN_DURATION_MIN = 60


class Activity(str, Enum):
    STILL = "still"
    WALKING = "walking"
    RUNNING = "running"
    CYCLING = "cycling"
    OTHER = "other"
    UNKNOWN = "unknown"


class SleepStage(str, Enum):
    NONE = "none"
    AWAKE = "awake"
    LIGHT = "light"
    DEEP = "deep"
    REM = "rem"


ACTIVE_MODES = frozenset({Activity.WALKING, Activity.RUNNING, Activity.CYCLING, Activity.OTHER})

MODE_CODE = {m: i for i, m in enumerate(Activity)}
MODE_FROM_CODE = {i: m for m, i in MODE_CODE.items()}
STAGE_CODE = {s: i for i, s in enumerate(SleepStage)}
STAGE_FROM_CODE = {i: s for s, i in STAGE_CODE.items()}


@dataclass(frozen=True, slots=True)
class MinuteSample:
    """One minute of fused sensor readings.

    ``plausible`` records whether the raw observation passed the
    screening bounds; implausible values are neutralized (heart rate
    dropped, step count zeroed) but the sample itself is retained so
    quality accounting can see the strike. The flag does not take part
    in equality.
    """

    ts: datetime
    hr_bpm: Optional[int]
    steps: int
    activity_mode: Activity
    sleep_stage: SleepStage
    plausible: bool = field(default=True, compare=False)


@dataclass(frozen=True)
class QualityReport:
    continuity: float
    accuracy: float
    span_days: int


@dataclass(frozen=True)
class ExerciseSession:
    start: datetime
    end: datetime
    duration_min: int
    mean_hr: float
    zone_minutes: tuple[int, int, int]  # (low, medium, high)


@dataclass(frozen=True)
class SleepSession:
    start: datetime
    end: datetime
    stage_minutes: dict[str, int]  # keys: light, deep, rem, awake
    wakeups: int
    sleep_score: float

    @property
    def duration_min(self) -> int:
        return int((self.end - self.start).total_seconds() // 60) + 1


@dataclass(frozen=True)
class WeeklyFeatures:
    week_start: date
    week_index: int
    exercise_count: int
    avg_exercise_min: Optional[float]
    avg_exercise_hr: Optional[float]
    avg_active_min: float
    avg_sleep_score: Optional[float]
    avg_sleep_min: Optional[dict[str, float]]
    avg_wakeups: Optional[float]
    weekly_resting_hr: Optional[float]


@dataclass(frozen=True)
class Eligibility:
    eligible: bool
    reasons: tuple[str, ...]
    span_days: int
    quality: QualityReport


# ---------------------------------------------------------------------------
# columnar minute frame: the internal representation all segmentation and
# aggregation works on. Samples convert in; simulators can build frames
# directly without allocating per-minute objects.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinuteFrame:
    """Column-oriented view of a deduplicated, sorted minute stream."""

    minutes: np.ndarray    # int64, epoch minutes, strictly increasing
    hr: np.ndarray         # float64, NaN where absent
    steps: np.ndarray      # int32
    mode: np.ndarray       # uint8, Activity codes
    stage: np.ndarray      # uint8, SleepStage codes
    plausible: np.ndarray  # bool

    def __len__(self) -> int:
        return len(self.minutes)

    @classmethod
    def from_samples(cls, samples: Sequence[MinuteSample]) -> "MinuteFrame":
        n = len(samples)
        minutes = np.empty(n, dtype=np.int64)
        hr = np.empty(n, dtype=np.float64)
        steps = np.empty(n, dtype=np.int32)
        mode = np.empty(n, dtype=np.uint8)
        stage = np.empty(n, dtype=np.uint8)
        plausible = np.empty(n, dtype=bool)
        for i, s in enumerate(samples):
            minutes[i] = epoch_minute(s.ts)
            hr[i] = math.nan if s.hr_bpm is None else float(s.hr_bpm)
            steps[i] = s.steps
            mode[i] = MODE_CODE[s.activity_mode]
            stage[i] = STAGE_CODE[s.sleep_stage]
            plausible[i] = s.plausible
        order = np.argsort(minutes, kind="stable")
        minutes, hr, steps = minutes[order], hr[order], steps[order]
        mode, stage, plausible = mode[order], stage[order], plausible[order]
        if len(minutes) > 1 and np.any(minutes[:-1] >= minutes[1:]):
            raise ValueError("samples must be deduplicated per minute")
        return cls(minutes, hr, steps, mode, stage, plausible)

    def to_samples(self) -> list[MinuteSample]:
        out = []
        for i in range(len(self.minutes)):
            hr = None if math.isnan(self.hr[i]) else int(self.hr[i])
            out.append(
                MinuteSample(
                    ts=from_epoch_minute(int(self.minutes[i])),
                    hr_bpm=hr,
                    steps=int(self.steps[i]),
                    activity_mode=MODE_FROM_CODE[int(self.mode[i])],
                    sleep_stage=STAGE_FROM_CODE[int(self.stage[i])],
                    plausible=bool(self.plausible[i]),
                )
            )
        return out


SampleInput = Union[Sequence[MinuteSample], MinuteFrame]


def as_frame(samples: SampleInput) -> MinuteFrame:
    if isinstance(samples, MinuteFrame):
        return samples
    return MinuteFrame.from_samples(samples)


def epoch_minute(ts: datetime) -> int:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return int(ts.timestamp() // 60)


def from_epoch_minute(minute: int) -> datetime:
    return datetime.fromtimestamp(minute * 60, tz=timezone.utc)


def local_date(ts_or_minute, tz_offset_min: int = 0) -> date:
    minute = ts_or_minute if isinstance(ts_or_minute, int) else epoch_minute(ts_or_minute)
    return (datetime(1970, 1, 1) + timedelta(minutes=minute + tz_offset_min)).date()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParseResult:
    samples: list[MinuteSample]
    rejects: list[tuple[int, str]]  # (1-based line number, reason)

    def rejects_report(self) -> str:
        return "\n".join(f"{n}: {reason}" for n, reason in self.rejects)


def _parse_ts(text: str) -> datetime:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    return ts.replace(second=0, microsecond=0)


def parse_stream(records: Iterable[str]) -> ParseResult:
    """Parse raw CSV lines into sorted, minute-deduplicated samples.

    Later lines win when two records share a minute. Implausible values
    are neutralized and flagged rather than rejected; structurally
    malformed lines go to the rejects list.
    """
    by_minute: dict[int, MinuteSample] = {}
    rejects: list[tuple[int, str]] = []
    for line_no, line in enumerate(records, start=1):
        text = line.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 5:
            rejects.append((line_no, f"expected 5 fields, got {len(parts)}"))
            continue
        ts_raw, hr_raw, steps_raw, mode_raw, stage_raw = (p.strip() for p in parts)
        try:
            ts = _parse_ts(ts_raw)
        except ValueError:
            rejects.append((line_no, f"bad timestamp {ts_raw!r}"))
            continue
        plausible = True
        hr: Optional[int] = None
        if hr_raw:
            try:
                hr = int(hr_raw)
            except ValueError:
                rejects.append((line_no, f"bad heart rate {hr_raw!r}"))
                continue
            if not HR_MIN <= hr <= HR_MAX:
                hr = None
                plausible = False
        try:
            steps = int(steps_raw)
        except ValueError:
            rejects.append((line_no, f"bad step count {steps_raw!r}"))
            continue
        if steps < 0:
            rejects.append((line_no, f"negative step count {steps}"))
            continue
        if steps > STEPS_MAX:
            steps = 0
            plausible = False
        try:
            mode = Activity(mode_raw)
        except ValueError:
            rejects.append((line_no, f"unknown activity mode {mode_raw!r}"))
            continue
        try:
            stage = SleepStage(stage_raw)
        except ValueError:
            rejects.append((line_no, f"unknown sleep stage {stage_raw!r}"))
            continue
        by_minute[epoch_minute(ts)] = MinuteSample(ts, hr, steps, mode, stage, plausible)
    samples = [by_minute[m] for m in sorted(by_minute)]
    return ParseResult(samples=samples, rejects=rejects)


def serialize_samples(samples: Sequence[MinuteSample]) -> list[str]:
    """Render samples back to the CSV line format accepted by parse_stream."""
    lines = []
    for s in samples:
        ts = s.ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M") + "Z"
        hr = "" if s.hr_bpm is None else str(s.hr_bpm)
        lines.append(f"{ts},{hr},{s.steps},{s.activity_mode.value},{s.sleep_stage.value}")
    return lines


# ---------------------------------------------------------------------------
# quality
# ---------------------------------------------------------------------------


def quality(samples: SampleInput, start: datetime, days: int) -> QualityReport:
    """Continuity and accuracy of a deduplicated stream over a span.

    Continuity is present minutes over expected minutes; accuracy is
    plausibility-passing samples over present samples (1.0 when the
    span holds no samples at all, vacuously).
    """
    if days < 1:
        raise ValueError("span must cover at least one day")
    frame = as_frame(samples)
    lo = epoch_minute(start)
    hi = lo + days * 1440
    mask = (frame.minutes >= lo) & (frame.minutes < hi)
    present = int(np.count_nonzero(mask))
    passing = int(np.count_nonzero(frame.plausible[mask]))
    continuity = present / (days * 1440)
    accuracy = passing / present if present else 1.0
    return QualityReport(continuity=continuity, accuracy=accuracy, span_days=days)


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------


def segment_exercise(
    samples: SampleInput,
    profile,
    *,
    max_gap_min: int = EXERCISE_MAX_GAP_MIN,
    min_duration_min: int = EXERCISE_MIN_DURATION_MIN,
) -> list[ExerciseSession]:
    """Cut the stream into exercise sessions.

    A session is a maximal run of minutes in an active mode with an HR
    reading, bridging gaps of at most ``max_gap_min`` and dropping runs
    shorter than ``min_duration_min``. Zone minutes bucket each wall
    minute of the session against the profile's max heart rate: minutes
    without an HR reading (including bridged gaps) count as low, as do
    minutes below the medium band.
    """
    frame = as_frame(samples)
    if len(frame) == 0:
        return []
    active_codes = np.array([MODE_CODE[m] for m in ACTIVE_MODES], dtype=np.uint8)
    active = np.isin(frame.mode, active_codes) & ~np.isnan(frame.hr)
    active_minutes = frame.minutes[active]
    runs = kernels.group_minutes(active_minutes, max_gap_min, min_duration_min)
    max_hr = float(profile.max_hr)
    sessions = []
    for start_min, end_min in runs:
        span = end_min - start_min + 1
        sel = (frame.minutes >= start_min) & (frame.minutes <= end_min)
        hr = frame.hr[sel]
        hr = hr[~np.isnan(hr)]
        med = int(np.count_nonzero((hr >= 0.70 * max_hr) & (hr < 0.80 * max_hr)))
        high = int(np.count_nonzero(hr >= 0.80 * max_hr))
        sessions.append(
            ExerciseSession(
                start=from_epoch_minute(start_min),
                end=from_epoch_minute(end_min),
                duration_min=span,
                mean_hr=float(np.mean(hr)),
                zone_minutes=(span - med - high, med, high),
            )
        )
    return sessions


def _sleep_score(duration_min: int, deep_min: int, wakeups: int) -> float:
    # Duration toward an 8 h target, deep fraction toward 20%, and a
    # penalty per wakeup. Bounded to [0, 100].
    duration_part = 60.0 * min(duration_min / 480.0, 1.0)
    deep_part = 25.0 * min((deep_min / duration_min) / 0.20, 1.0) if duration_min else 0.0
    wake_part = 15.0 * max(0.0, 1.0 - wakeups / 10.0)
    return round(min(100.0, duration_part + deep_part + wake_part), 1)


def segment_sleep(
    samples: SampleInput,
    *,
    max_gap_min: int = SLEEP_MAX_GAP_MIN,
    min_duration_min: int = SLEEP_MIN_DURATION_MIN,
) -> list[SleepSession]:
    """Cut the stream into sleep sessions.

    Any staged minute (awake included) belongs to sleep; gaps bridged
    inside a session count as awake so stage minutes always sum to the
    session duration.
    """
    frame = as_frame(samples)
    if len(frame) == 0:
        return []
    staged = frame.stage != STAGE_CODE[SleepStage.NONE]
    staged_minutes = frame.minutes[staged]
    runs = kernels.group_minutes(staged_minutes, max_gap_min, min_duration_min)
    sessions = []
    awake_code = STAGE_CODE[SleepStage.AWAKE]
    for start_min, end_min in runs:
        span = end_min - start_min + 1
        sel = (frame.minutes >= start_min) & (frame.minutes <= end_min)
        stages = frame.stage[sel]
        counts = {
            "light": int(np.count_nonzero(stages == STAGE_CODE[SleepStage.LIGHT])),
            "deep": int(np.count_nonzero(stages == STAGE_CODE[SleepStage.DEEP])),
            "rem": int(np.count_nonzero(stages == STAGE_CODE[SleepStage.REM])),
        }
        counts["awake"] = span - counts["light"] - counts["deep"] - counts["rem"]
        # Wakeups: transitions into an awake minute. Reconstruct the dense
        # per-minute stage sequence with missing/none minutes as awake.
        dense = np.full(span, awake_code, dtype=np.uint8)
        idx = frame.minutes[sel] - start_min
        dense[idx] = stages
        dense[dense == STAGE_CODE[SleepStage.NONE]] = awake_code
        is_awake = dense == awake_code
        wakeups = int(np.count_nonzero(is_awake[1:] & ~is_awake[:-1]))
        if is_awake[0]:
            wakeups += 1
        sessions.append(
            SleepSession(
                start=from_epoch_minute(start_min),
                end=from_epoch_minute(end_min),
                stage_minutes=counts,
                wakeups=wakeups,
                sleep_score=_sleep_score(span, counts["deep"], wakeups),
            )
        )
    return sessions


# ---------------------------------------------------------------------------
# weekly aggregation and eligibility
# ---------------------------------------------------------------------------


def week_start_of(d: date) -> date:
    """Monday of the calendar week containing ``d``."""
    return d - timedelta(days=d.weekday())


def week_index_of(week_start: date) -> int:
    return week_start.toordinal() // 7


def weekly_features(
    sessions: Sequence[ExerciseSession],
    sleeps: Sequence[SleepSession],
    samples: SampleInput,
    week_start: date,
    tz_offset_min: int = 0,
) -> WeeklyFeatures:
    """Aggregate one calendar week of sessions and sleep into features."""
    if week_start.weekday() != 0:
        raise ValueError("week_start must be a Monday")
    frame = as_frame(samples)
    in_week = lambda d: week_start <= d < week_start + timedelta(days=7)

    week_sessions = [s for s in sessions if in_week(local_date(s.start, tz_offset_min))]
    week_sleeps = [s for s in sleeps if in_week(local_date(s.start, tz_offset_min))]

    n_ex = len(week_sessions)
    avg_ex_min = sum(s.duration_min for s in week_sessions) / n_ex if n_ex else None
    avg_ex_hr = sum(s.mean_hr for s in week_sessions) / n_ex if n_ex else None

    lo = epoch_minute(datetime.combine(week_start, datetime.min.time(), timezone.utc)) - tz_offset_min
    hi = lo + 7 * 1440
    week_mask = (frame.minutes >= lo) & (frame.minutes < hi)
    active_codes = np.array([MODE_CODE[m] for m in ACTIVE_MODES], dtype=np.uint8)
    active_count = int(np.count_nonzero(week_mask & np.isin(frame.mode, active_codes)))

    if week_sleeps:
        avg_score = sum(s.sleep_score for s in week_sleeps) / len(week_sleeps)
        avg_stage = {
            k: sum(s.stage_minutes[k] for s in week_sleeps) / len(week_sleeps)
            for k in ("light", "deep", "rem", "awake")
        }
        avg_wakeups = sum(s.wakeups for s in week_sleeps) / len(week_sleeps)
    else:
        avg_score = avg_stage = avg_wakeups = None

    from . import hse  # late import: hse depends on ingest types

    week_frame = MinuteFrame(
        frame.minutes[week_mask], frame.hr[week_mask], frame.steps[week_mask],
        frame.mode[week_mask], frame.stage[week_mask], frame.plausible[week_mask],
    )
    try:
        resting = hse.resting_hr_deep_sleep(week_frame)
    except Exception:
        resting = None

    return WeeklyFeatures(
        week_start=week_start,
        week_index=week_index_of(week_start),
        exercise_count=n_ex,
        avg_exercise_min=avg_ex_min,
        avg_exercise_hr=avg_ex_hr,
        avg_active_min=active_count / 7.0,
        avg_sleep_score=avg_score,
        avg_sleep_min=avg_stage,
        avg_wakeups=avg_wakeups,
        weekly_resting_hr=resting,
    )


def eligibility(
    samples: SampleInput,
    sessions: Sequence[ExerciseSession],
    tz_offset_min: int = 0,
    *,
    min_span_days: int = 84,
    quality_floor: float = 0.70,
    required_streak_weeks: int = 4,
) -> Eligibility:
    """Dataset-inclusion check: sustained use, data quality, weekly exercise.

    Eligible when the stream spans at least ``min_span_days`` with data on
    every day, continuity and accuracy both exceed ``quality_floor``, and
    some run of ``required_streak_weeks`` consecutive full weeks each
    contains at least one exercise session.
    """
    frame = as_frame(samples)
    if len(frame) == 0:
        raise ValueError("history must span at least one day")
    reasons = []

    first_day = local_date(int(frame.minutes[0]), tz_offset_min)
    last_day = local_date(int(frame.minutes[-1]), tz_offset_min)
    span_days = (last_day - first_day).days + 1

    days_seen = {local_date(int(m), tz_offset_min) for m in frame.minutes}
    if span_days < min_span_days or len(days_seen) < span_days:
        reasons.append("continuous_use")

    span_start = datetime.combine(first_day, datetime.min.time(), timezone.utc) - timedelta(
        minutes=tz_offset_min
    )
    q = quality(frame, span_start, span_days)
    if not q.continuity > quality_floor:
        reasons.append("continuity")
    if not q.accuracy > quality_floor:
        reasons.append("accuracy")

    # Full calendar weeks inside the span, each needing >= 1 session.
    first_week = week_start_of(first_day)
    if first_week < first_day:
        first_week += timedelta(days=7)
    full_weeks = []
    w = first_week
    while w + timedelta(days=6) <= last_day:
        full_weeks.append(w)
        w += timedelta(days=7)
    per_week = {w: 0 for w in full_weeks}
    for s in sessions:
        w = week_start_of(local_date(s.start, tz_offset_min))
        if w in per_week:
            per_week[w] += 1
    streak = best = 0
    for w in full_weeks:
        streak = streak + 1 if per_week[w] >= 1 else 0
        best = max(best, streak)
    if best < required_streak_weeks:
        reasons.append("weekly_exercise")

    return Eligibility(
        eligible=not reasons, reasons=tuple(reasons), span_days=span_days, quality=q
    )
