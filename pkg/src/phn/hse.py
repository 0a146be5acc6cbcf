"""Heart health state estimation.

Places a user in the (ASCVD risk, VO2Max indicator) plane. The risk
dimension combines the 10-year risk from the bank's coefficient table
with a relative-risk multiplier keyed on resting heart rate extracted
from deep sleep; the fitness dimension comes from step/walk test
indicator tables. Every estimator is a pure function of (profile, bank,
data): identical inputs always produce identical states.

The per-dimension confidence is a half-width that starts at a base
value and widens linearly with the age of the newest supporting
observation, so stale data shows up as a wider range rather than a
silently precise number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Optional, Sequence

import numpy as np

from . import ingest
from .errors import InsufficientDataError, OutOfModelRangeError
from .knowledge import KnowledgeBank

MIN_DEEP_SLEEP_MINUTES = 10
MIN_DEEP_SLEEP_NIGHTS = 3


@dataclass(frozen=True)
class UserProfile:
    """Demographics and lab values entered once, used everywhere.

    ``max_hr`` defaults to the age-predicted 220 - age and can be
    overridden for users with a measured maximum.
    """

    age: int
    sex: str  # "female" | "male"
    height_cm: float
    weight_kg: float
    smoker: bool
    diabetic: bool
    treated_bp: bool
    total_chol: float  # mg/dL
    hdl: float  # mg/dL
    systolic_bp: float  # mmHg
    timezone_offset_min: int = 0
    max_hr_override: Optional[float] = None

    def __post_init__(self):
        if not 18 <= self.age <= 100:
            raise ValueError(f"age {self.age} outside supported range 18..100")
        if self.sex not in ("female", "male"):
            raise ValueError(f"sex must be 'female' or 'male', got {self.sex!r}")
        if self.height_cm <= 0 or self.weight_kg <= 0:
            raise ValueError("height and weight must be positive")

    @property
    def max_hr(self) -> float:
        if self.max_hr_override is not None:
            return float(self.max_hr_override)
        return float(220 - self.age)

    def to_dict(self) -> dict:
        return {
            "age": self.age,
            "sex": self.sex,
            "height_cm": self.height_cm,
            "weight_kg": self.weight_kg,
            "smoker": self.smoker,
            "diabetic": self.diabetic,
            "treated_bp": self.treated_bp,
            "total_chol": self.total_chol,
            "hdl": self.hdl,
            "systolic_bp": self.systolic_bp,
            "timezone_offset_min": self.timezone_offset_min,
            "max_hr_override": self.max_hr_override,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UserProfile":
        return cls(**doc)


@dataclass(frozen=True)
class Confidence:
    """Per-dimension half-widths of the estimate."""

    risk_pct: float
    vo2: Optional[float]


@dataclass(frozen=True)
class TestResult:
    """A completed fitness test, already converted to an indicator."""

    ts: datetime
    kind: str  # "step" | "walk"
    indicator: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StepTestResult:
    indicator: float
    recovery_hr: float


@dataclass(frozen=True)
class HealthState:
    ts: datetime
    ascvd_risk_pct: float
    vo2max_indicator: Optional[float]
    resting_hr: float
    confidence: Confidence


def resting_hr_deep_sleep(
    samples: ingest.SampleInput, min_minutes: int = MIN_DEEP_SLEEP_MINUTES
) -> float:
    """Mean HR over deep-sleep minutes, rounded to 0.1 bpm.

    Requires at least ``min_minutes`` deep-sleep minutes with a reading.
    """
    frame = ingest.as_frame(samples)
    deep_code = ingest.STAGE_CODE[ingest.SleepStage.DEEP]
    mask = (frame.stage == deep_code) & ~np.isnan(frame.hr)
    count = int(np.count_nonzero(mask))
    if count < min_minutes:
        raise InsufficientDataError(
            f"need >= {min_minutes} deep-sleep minutes with HR, found {count}"
        )
    return round(float(np.mean(frame.hr[mask])), 1)


def _ascvd_term(name: str, profile: UserProfile) -> float:
    la = math.log(profile.age)
    if name == "ln_age":
        return la
    if name == "ln_age_sq":
        return la * la
    if name == "ln_tc":
        return math.log(profile.total_chol)
    if name == "ln_age_ln_tc":
        return la * math.log(profile.total_chol)
    if name == "ln_hdl":
        return math.log(profile.hdl)
    if name == "ln_age_ln_hdl":
        return la * math.log(profile.hdl)
    if name == "ln_sbp_treated":
        return math.log(profile.systolic_bp) if profile.treated_bp else 0.0
    if name == "ln_sbp_untreated":
        return math.log(profile.systolic_bp) if not profile.treated_bp else 0.0
    if name == "smoker":
        return 1.0 if profile.smoker else 0.0
    if name == "ln_age_smoker":
        return la if profile.smoker else 0.0
    if name == "diabetic":
        return 1.0 if profile.diabetic else 0.0
    raise OutOfModelRangeError(f"unknown ascvd term {name!r}")


def ascvd_risk(profile: UserProfile, bank: KnowledgeBank) -> float:
    """10-year cardiovascular risk percent from the bank's table."""
    lo, hi = bank.ascvd_validity()
    if not lo <= profile.age <= hi:
        raise OutOfModelRangeError(f"age {profile.age} outside model range {lo}..{hi}")
    row = bank.ascvd_coefficients(profile.sex)
    total = 0.0
    for name, coef in row["terms"]:
        total += coef * _ascvd_term(name, profile)
    survival = row["baseline_survival"] ** math.exp(total - row["mean_terms"])
    return 100.0 * (1.0 - survival)


def modified_risk(ascvd_pct: float, resting_hr: float, bank: KnowledgeBank) -> float:
    """ASCVD risk weighted by the resting-HR relative-risk multiplier."""
    value = ascvd_pct * bank.rhr_multiplier(resting_hr)
    return min(100.0, max(0.0, value))


def vo2max_step_test(
    recovery_hr_trace: Sequence[float], profile: UserProfile, bank: KnowledgeBank
) -> StepTestResult:
    """VO2Max indicator from the 60-second recovery trace of a step test.

    Recovery HR is the trace mean; a lower mean recovery HR never maps
    to a lower indicator.
    """
    if len(recovery_hr_trace) != 60:
        raise InsufficientDataError(
            f"recovery trace must cover 60 seconds, got {len(recovery_hr_trace)}"
        )
    trace = np.asarray(recovery_hr_trace, dtype=np.float64)
    if np.any(~np.isfinite(trace)) or np.any(trace < ingest.HR_MIN) or np.any(trace > ingest.HR_MAX):
        raise ValueError("recovery trace contains implausible values")
    recovery = float(np.mean(trace))
    indicator = bank.step_test_indicator(recovery, profile.age, profile.sex)
    return StepTestResult(indicator=indicator, recovery_hr=recovery)


def vo2max_walk_test(distance_m: float, profile: UserProfile, bank: KnowledgeBank) -> float:
    """VO2Max indicator from a 6-minute walk distance."""
    if not 0 < distance_m < 2000:
        raise ValueError(f"implausible 6-minute walk distance {distance_m} m")
    return bank.walk_test_indicator(distance_m, profile.age, profile.sex)


def estimate_health_state(
    profile: UserProfile,
    bank: KnowledgeBank,
    samples: ingest.SampleInput,
    tests: Sequence[TestResult],
    now: datetime,
) -> HealthState:
    """Assemble the current heart health state from the last 7 days.

    Gate: at least MIN_DEEP_SLEEP_NIGHTS nights in the window with
    enough deep-sleep HR minutes. Resting HR pools every deep-sleep
    minute in the window; the fitness indicator comes from the newest
    test on record (absent if the user never tested).
    """
    if now.tzinfo is None:
        now = now.replace(tzinfo=timezone.utc)
    frame = ingest.as_frame(samples)
    window_lo = ingest.epoch_minute(now - timedelta(days=7))
    window_hi = ingest.epoch_minute(now)
    sel = (frame.minutes >= window_lo) & (frame.minutes < window_hi)

    deep_code = ingest.STAGE_CODE[ingest.SleepStage.DEEP]
    deep = sel & (frame.stage == deep_code) & ~np.isnan(frame.hr)
    deep_minutes = frame.minutes[deep]
    nights: dict = {}
    for m in deep_minutes:
        d = ingest.local_date(int(m), profile.timezone_offset_min)
        nights[d] = nights.get(d, 0) + 1
    good_nights = [d for d, n in nights.items() if n >= MIN_DEEP_SLEEP_MINUTES]
    if len(good_nights) < MIN_DEEP_SLEEP_NIGHTS:
        raise InsufficientDataError(
            f"need deep sleep on >= {MIN_DEEP_SLEEP_NIGHTS} nights in the past 7 days, "
            f"found {len(good_nights)} (stream: deep_sleep)"
        )
    resting = round(float(np.mean(frame.hr[deep])), 1)
    risk = modified_risk(ascvd_risk(profile, bank), resting, bank)

    conf = bank.confidence
    days_since_sleep = max(0.0, (window_hi - int(deep_minutes.max())) / 1440.0)
    risk_halfwidth = conf["risk_base_halfwidth_pct"] + conf["risk_growth_pct_per_day"] * days_since_sleep

    latest = max(tests, key=lambda t: t.ts, default=None)
    if latest is None:
        vo2 = None
        vo2_halfwidth = None
    else:
        vo2 = latest.indicator
        age_days = max(0.0, (now - latest.ts).total_seconds() / 86400.0)
        vo2_halfwidth = conf["vo2_base_halfwidth"] + conf["vo2_growth_per_day"] * age_days

    return HealthState(
        ts=now,
        ascvd_risk_pct=risk,
        vo2max_indicator=vo2,
        resting_hr=resting,
        confidence=Confidence(risk_pct=risk_halfwidth, vo2=vo2_halfwidth),
    )
