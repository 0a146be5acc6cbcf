"""Operations shared by the HTTP API and the CLI.

Thin composition helpers: everything is recomputed from the event log
on each call, which keeps replay determinism trivial.
"""

from __future__ import annotations

from datetime import date
from typing import Optional

from . import guidance as guidance_mod
from . import ingest, trainload
from .knowledge import KnowledgeBank
from .store import UserStore


def loads_for(store: UserStore, user_id: str) -> list[trainload.TrainingLoadState]:
    measured = store.daily_measured_trimp(user_id)
    if not measured:
        return []
    return trainload.update_loads(measured)


def loads_csv(store: UserStore, user_id: str) -> str:
    lines = ["date,trimp,ctl,atl,tsb"]
    for s in loads_for(store, user_id):
        lines.append(f"{s.day.isoformat()},{s.trimp_day!r},{s.ctl!r},{s.atl!r},{s.tsb!r}")
    return "\n".join(lines) + "\n"


def guidance_for(
    store: UserStore,
    bank: KnowledgeBank,
    user_id: str,
    day: date,
    knobs: Optional[guidance_mod.GuidanceKnobs] = None,
) -> tuple[guidance_mod.WeeklyPlan, guidance_mod.DailyGuidance]:
    """Weekly plan and daily guidance for one user and date."""
    knobs = knobs or guidance_mod.GuidanceKnobs.from_bank(bank)
    profile = store.profile(user_id)
    week_start = ingest.week_start_of(day)
    measured = store.daily_measured_trimp(user_id)
    history = {d: v for d, v in measured.items() if d < week_start}
    states = trainload.update_loads(history) if history else []
    plan = guidance_mod.build_weekly_plan(week_start, states, knobs)
    daily = guidance_mod.control_step(profile, knobs, measured, plan, day)
    return plan, daily
