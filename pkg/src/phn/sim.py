"""Closed-loop verification harness.

A virtual user with a two-time-constant fitness/fatigue physiology
executes (or ignores) each day's guidance; the harness renders the
result as synthetic minute samples, pushes them through the real
ingestion, estimation, and training-load layers, and feeds the next
control step from what was measured. Traces are bit-reproducible from
(user, config, seed).

The physiology is impulse-response based: fitness and fatigue are
exponentially decayed sums of past daily TRIMP with slow and fast time
constants. A state-space view of the same recursion is exposed through
``banister_system`` and the generic linear ``step``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import guidance as guidance_mod
from . import hse, ingest, kernels, statespace, trainload
from .errors import InsufficientDataError, PhnError
from .knowledge import KnowledgeBank


class SimAborted(PhnError):
    """A layer failed mid-loop; carries the trace recorded so far."""

    def __init__(self, message: str, partial: "SimTrace"):
        super().__init__(message)
        self.partial = partial

# ---------------------------------------------------------------------------
# linear state dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A, B, C, D = (np.asarray(m, dtype=np.float64) for m in (self.A, self.B, self.C, self.D))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B rows must match state size {n}, got {B.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C cols must match state size {n}, got {C.shape}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")


def step(system: LinearSystem, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One step of x' = Ax + Bu, y = Cx + Du."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.shape != (system.A.shape[0],):
        raise ValueError(f"state must have shape ({system.A.shape[0]},), got {x.shape}")
    if u.shape != (system.B.shape[1],):
        raise ValueError(f"input must have shape ({system.B.shape[1]},), got {u.shape}")
    x_next = system.A @ x + system.B @ u
    y = system.C @ x + system.D @ u
    return x_next, y


# ---------------------------------------------------------------------------
# virtual physiology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysiologyParams:
    k1: float = 1.0
    k2: float = 2.0
    tau1: float = 42.0  # fitness time constant, days
    tau2: float = 7.0  # fatigue time constant, days
    baseline_rhr: float = 62.0
    baseline_vo2: float = 35.0
    alpha_hr: float = 0.005  # bpm of resting-HR drop per unit fitness
    beta_hr: float = 0.005  # bpm of resting-HR rise per unit fatigue
    alpha_vo2: float = 0.004
    beta_vo2: float = 0.004

    def __post_init__(self):
        if not self.tau1 > self.tau2 > 0:
            raise ValueError("need tau1 > tau2 > 0")
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class AdherenceParams:
    p_follow: float = 1.0
    intensity_noise_sd: float = 0.0
    skip_rest_prob: float = 1.0  # when not following: rest vs a light workout
    light_minutes: tuple[int, int] = (10, 30)

    def __post_init__(self):
        if not 0.0 <= self.p_follow <= 1.0:
            raise ValueError("p_follow must be in [0, 1]")


@dataclass(frozen=True)
class VirtualUser:
    profile: hse.UserProfile
    physiology: PhysiologyParams = PhysiologyParams()
    adherence: AdherenceParams = AdherenceParams()


def default_virtual_user() -> VirtualUser:
    return VirtualUser(
        profile=hse.UserProfile(
            age=45,
            sex="male",
            height_cm=176.0,
            weight_kg=78.0,
            smoker=False,
            diabetic=False,
            treated_bp=False,
            total_chol=200.0,
            hdl=50.0,
            systolic_bp=122.0,
        )
    )


def physiology(user: VirtualUser, daily_trimp: Sequence[float]) -> tuple[float, float]:
    """Resting HR and VO2 indicator after the given dose history.

    Fitness and fatigue are decayed sums of past daily TRIMP; fatigue
    decays faster, so a workout first worsens and then improves the
    outputs. Outputs clamp to plausibility bounds.
    """
    p = user.physiology
    doses = np.asarray(daily_trimp, dtype=np.float64)
    g = kernels.impulse_value(doses, p.tau1)
    h = kernels.impulse_value(doses, p.tau2)
    rhr = p.baseline_rhr - p.k1 * g * p.alpha_hr + p.k2 * h * p.beta_hr
    vo2 = p.baseline_vo2 + p.k1 * g * p.alpha_vo2 - p.k2 * h * p.beta_vo2
    rhr = min(max(rhr, float(ingest.HR_MIN)), float(ingest.HR_MAX))
    vo2 = min(max(vo2, 10.0), 80.0)
    return rhr, vo2


def banister_system(params: PhysiologyParams) -> LinearSystem:
    """The physiology recursion as a discrete linear system.

    State is (fitness, fatigue); one step with input u advances
    x' = decay * (x + u), matching the decayed-sum definition.
    """
    d1 = math.exp(-1.0 / params.tau1)
    d2 = math.exp(-1.0 / params.tau2)
    A = np.array([[d1, 0.0], [0.0, d2]])
    B = np.array([[d1], [d2]])
    # Outputs are deviations from baseline: (rhr - baseline, vo2 - baseline).
    C = np.array(
        [
            [-params.k1 * params.alpha_hr, params.k2 * params.beta_hr],
            [params.k1 * params.alpha_vo2, -params.k2 * params.beta_vo2],
        ]
    )
    D = np.zeros((2, 1))
    return LinearSystem(A=A, B=B, C=C, D=D)


# ---------------------------------------------------------------------------
# adherence
# ---------------------------------------------------------------------------


_INTENSITY_INDEX = {"low": 0, "medium": 1, "high": 2}


def adherence(
    daily: guidance_mod.DailyGuidance,
    params: AdherenceParams,
    rng: np.random.Generator,
) -> trainload.Workout:
    """What the user actually does with today's guidance."""
    zones = [0.0, 0.0, 0.0]
    if daily.options:
        if rng.random() < params.p_follow:
            option = daily.options[int(rng.integers(0, len(daily.options)))]
            minutes = float(option.minutes)
            if params.intensity_noise_sd > 0:
                minutes = rng.normal(minutes, params.intensity_noise_sd)
            zones[_INTENSITY_INDEX[option.intensity]] = max(0.0, float(round(minutes)))
        elif rng.random() >= params.skip_rest_prob:
            zones[0] = float(rng.integers(params.light_minutes[0], params.light_minutes[1] + 1))
    return trainload.Workout(day=daily.day, zone_minutes=tuple(zones))


# ---------------------------------------------------------------------------
# synthetic minute rendering
# ---------------------------------------------------------------------------

_SLEEP_MINUTES = 450  # 7.5 h scripted sleep starting at midnight
_DEEP_RANGE = (60, 150)  # 90 deep minutes = 20% of the sleep block
_REM_RANGE = (300, 350)
_AWAKE_RANGE = (225, 227)
_WORKOUT_START = 1080  # 18:00


def _render_day(
    day: date,
    rhr_true: float,
    executed: trainload.Workout,
    profile: hse.UserProfile,
    knobs: guidance_mod.GuidanceKnobs,
    rng: np.random.Generator,
) -> ingest.MinuteFrame:
    """One full day of synthetic minute samples (sleep, idle, workout)."""
    base = ingest.epoch_minute(datetime.combine(day, time(0, 0), timezone.utc))
    minutes = base + np.arange(1440, dtype=np.int64)
    mode = np.full(1440, ingest.MODE_CODE[ingest.Activity.STILL], dtype=np.uint8)
    stage = np.full(1440, ingest.STAGE_CODE[ingest.SleepStage.NONE], dtype=np.uint8)
    steps = np.zeros(1440, dtype=np.int32)

    hr = np.empty(1440, dtype=np.float64)
    hr[:_SLEEP_MINUTES] = rng.normal(rhr_true + 4.0, 1.0, _SLEEP_MINUTES)
    hr[_DEEP_RANGE[0] : _DEEP_RANGE[1]] = rng.normal(
        rhr_true, 0.8, _DEEP_RANGE[1] - _DEEP_RANGE[0]
    )
    hr[_SLEEP_MINUTES:] = rng.normal(rhr_true + 18.0, 3.0, 1440 - _SLEEP_MINUTES)

    stage[:_SLEEP_MINUTES] = ingest.STAGE_CODE[ingest.SleepStage.LIGHT]
    stage[_DEEP_RANGE[0] : _DEEP_RANGE[1]] = ingest.STAGE_CODE[ingest.SleepStage.DEEP]
    stage[_REM_RANGE[0] : _REM_RANGE[1]] = ingest.STAGE_CODE[ingest.SleepStage.REM]
    stage[_AWAKE_RANGE[0] : _AWAKE_RANGE[1]] = ingest.STAGE_CODE[ingest.SleepStage.AWAKE]

    steps[_SLEEP_MINUTES:] = rng.integers(0, 8, 1440 - _SLEEP_MINUTES)

    cursor = _WORKOUT_START
    for zone_idx, zone_min in enumerate(executed.zone_minutes):
        n = int(round(zone_min))
        if n <= 0:
            continue
        frac_lo, frac_hi = knobs.band_fractions[zone_idx]
        lo, hi = guidance_mod.hr_band_bounds(
            frac_lo, frac_hi, profile.max_hr, inclusive_hi=zone_idx == 2
        )
        if zone_idx == 0:
            # Stay above the band floor but keep headroom below medium.
            lo = max(lo, int(0.58 * profile.max_hr))
        mid = (lo + hi) / 2.0
        end = min(cursor + n, 1440)
        count = end - cursor
        hr[cursor:end] = np.clip(np.round(rng.normal(mid, 2.0, count)), lo, hi)
        mode[cursor:end] = ingest.MODE_CODE[ingest.Activity.RUNNING]
        steps[cursor:end] = rng.integers(140, 170, count)
        cursor = end

    np.round(hr, out=hr)
    np.clip(hr, ingest.HR_MIN, ingest.HR_MAX, out=hr)
    return ingest.MinuteFrame(
        minutes=minutes,
        hr=hr,
        steps=steps,
        mode=mode,
        stage=stage,
        plausible=np.ones(1440, dtype=bool),
    )


def _render_step_test(
    vo2_true: float,
    profile: hse.UserProfile,
    bank: KnowledgeBank,
    when: datetime,
    rng: np.random.Generator,
) -> hse.TestResult:
    # Invert the bank's step-test table so the recovery trace encodes the
    # virtual user's true fitness, plus sensor noise.
    row = bank.doc["step_test_table"][profile.sex]
    target = (row["intercept"] + row["age_adjust_per_year"] * profile.age - vo2_true) / (
        -row["slope_per_bpm"]
    )
    trace = np.clip(np.round(rng.normal(target, 2.0, 60)), 60, 200)
    result = hse.vo2max_step_test(trace, profile, bank)
    return hse.TestResult(
        ts=when, kind="step", indicator=result.indicator,
        detail={"recovery_hr": result.recovery_hr},
    )


# ---------------------------------------------------------------------------
# the closed loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    days: int = 84
    seed: int = 0
    start: date = date(2021, 3, 1)  # a Monday, aligning plan weeks
    goal_roi: Optional[str] = "healthy_heart"
    test_day_of_week: int = 3

    def __post_init__(self):
        if self.days < 14:
            raise ValueError("simulation needs at least 14 days")
        if self.start.weekday() != 0:
            raise ValueError("simulation must start on a Monday")


@dataclass(frozen=True)
class SimDay:
    day: date
    day_index: int
    week_start: date
    prescribed_trimp: float
    rest_prescribed: bool
    executed_zones: tuple[float, float, float]
    measured_trimp: float
    ctl: float
    atl: float
    tsb: float
    tsb_zone: str
    true_resting_hr: float
    true_vo2: float
    est_resting_hr: Optional[float]
    est_vo2: Optional[float]
    est_risk_pct: Optional[float]
    node_index: Optional[int]


@dataclass(frozen=True)
class SimTrace:
    user: VirtualUser
    config: SimConfig
    days: tuple[SimDay, ...]
    plans: tuple[guidance_mod.WeeklyPlan, ...]
    routes: tuple[guidance_mod.Route, ...]
    graph: statespace.StateGraph

    CSV_COLUMNS = (
        "date,day_index,week_start,prescribed_trimp,rest_prescribed,"
        "exec_low_min,exec_med_min,exec_high_min,measured_trimp,"
        "ctl,atl,tsb,tsb_zone,true_resting_hr,true_vo2,"
        "est_resting_hr,est_vo2,est_risk_pct,node_index"
    )

    def to_csv(self) -> str:
        def f(x) -> str:
            if x is None:
                return ""
            if isinstance(x, float):
                return repr(x)
            return str(x)

        lines = [self.CSV_COLUMNS]
        for d in self.days:
            lines.append(
                ",".join(
                    [
                        d.day.isoformat(),
                        str(d.day_index),
                        d.week_start.isoformat(),
                        f(d.prescribed_trimp),
                        "1" if d.rest_prescribed else "0",
                        f(d.executed_zones[0]),
                        f(d.executed_zones[1]),
                        f(d.executed_zones[2]),
                        f(d.measured_trimp),
                        f(d.ctl),
                        f(d.atl),
                        f(d.tsb),
                        d.tsb_zone,
                        f(d.true_resting_hr),
                        f(d.true_vo2),
                        f(d.est_resting_hr),
                        f(d.est_vo2),
                        f(d.est_risk_pct),
                        f(d.node_index),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_csv().encode("utf-8"))


def run_closed_loop(
    user: VirtualUser,
    config: SimConfig = SimConfig(),
    bank: Optional[KnowledgeBank] = None,
) -> SimTrace:
    """Run the full daily loop for the configured horizon.

    Each day: physiology -> synthetic minutes -> ingestion -> state and
    load estimation -> control step -> adherence -> measurement. Weekly
    plans re-derive from measured CTL; state estimates refresh on test
    days.
    """
    bank = bank or KnowledgeBank.default()
    knobs = guidance_mod.GuidanceKnobs.from_bank(bank)
    profile = user.profile
    rng = np.random.default_rng(config.seed)

    ghss = statespace.ghss_from_bank(bank)
    phss = statespace.personalize(ghss, profile, bank)
    graph = statespace.discretize_and_label(phss, statespace.rois_from_bank(bank), bank)

    executed_doses: list[float] = []
    measured: dict[date, float] = {}
    states: list[trainload.TrainingLoadState] = []
    frames: list[ingest.MinuteFrame] = []
    tests: list[hse.TestResult] = []
    plans: list[guidance_mod.WeeklyPlan] = []
    routes: list[guidance_mod.Route] = []
    rows: list[SimDay] = []
    plan: Optional[guidance_mod.WeeklyPlan] = None
    last_state: Optional[hse.HealthState] = None
    last_node: Optional[int] = None

    def _trace() -> SimTrace:
        return SimTrace(
            user=user,
            config=config,
            days=tuple(rows),
            plans=tuple(plans),
            routes=tuple(routes),
            graph=graph,
        )

    try:
        for day_index in range(config.days):
            today = config.start + timedelta(days=day_index)
            rhr_true, vo2_true = physiology(user, executed_doses)

            if day_index % 7 == 0:
                plan = guidance_mod.build_weekly_plan(today, states, knobs)
                plans.append(plan)
            assert plan is not None

            daily = guidance_mod.control_step(profile, knobs, measured, plan, today)
            executed = adherence(daily, user.adherence, rng)

            frame = _render_day(today, rhr_true, executed, profile, knobs, rng)
            frames.append(frame)
            if len(frames) > 8:
                frames.pop(0)

            sessions = ingest.segment_exercise(frame, profile)
            day_trimp = math.fsum(
                trainload.trimp_of_zones(s.zone_minutes, knobs.lucia) for s in sessions
            )
            measured[today] = day_trimp
            executed_doses.append(day_trimp)
            states = trainload.update_loads(measured)

            day_end = datetime.combine(today + timedelta(days=1), time(0, 0), timezone.utc)
            if day_index % 7 == config.test_day_of_week:
                tests.append(_render_step_test(vo2_true, profile, bank, day_end, rng))
                window = ingest.MinuteFrame(
                    minutes=np.concatenate([fr.minutes for fr in frames]),
                    hr=np.concatenate([fr.hr for fr in frames]),
                    steps=np.concatenate([fr.steps for fr in frames]),
                    mode=np.concatenate([fr.mode for fr in frames]),
                    stage=np.concatenate([fr.stage for fr in frames]),
                    plausible=np.concatenate([fr.plausible for fr in frames]),
                )
                try:
                    last_state = hse.estimate_health_state(profile, bank, window, tests, day_end)
                    located = statespace.locate(last_state, graph)
                    last_node = located.index
                    if not routes and config.goal_roi:
                        goal = guidance_mod.goal_from_roi(graph, config.goal_roi)
                        routes.extend(guidance_mod.plan_routes(graph, last_node, goal, k=3))
                except InsufficientDataError:
                    pass

            s = states[-1]
            rows.append(
                SimDay(
                    day=today,
                    day_index=day_index,
                    week_start=plan.week_start,
                    prescribed_trimp=daily.trimp_d,
                    rest_prescribed=daily.rest_day,
                    executed_zones=executed.zone_minutes,
                    measured_trimp=day_trimp,
                    ctl=s.ctl,
                    atl=s.atl,
                    tsb=s.tsb,
                    tsb_zone=trainload.tsb_zone(s.tsb).value,
                    true_resting_hr=rhr_true,
                    true_vo2=vo2_true,
                    est_resting_hr=last_state.resting_hr if last_state else None,
                    est_vo2=last_state.vo2max_indicator if last_state else None,
                    est_risk_pct=last_state.ascvd_risk_pct if last_state else None,
                    node_index=last_node,
                )
            )
    except PhnError as exc:
        raise SimAborted(
            f"aborted after {len(rows)} day(s): {exc}", partial=_trace()
        ) from exc

    return _trace()
