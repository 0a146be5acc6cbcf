"""Per-user append-only event store.

One JSONL file per user holds the full input history: profile updates,
raw sample uploads, fitness tests, logged workouts, and goal changes.
Derived state (loads, health states, guidance) is always recomputed
from the log, so replaying a log byte-for-byte reproduces every
response. Writes for one user are serialized; a caller may pass the
sequence number it last saw to detect concurrent writers.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Optional

from . import ingest, trainload
from .errors import PhnError
from .hse import TestResult, UserProfile

EVENT_TYPES = ("profile", "samples", "test", "workout", "goal")


class ConflictError(PhnError):
    """Optimistic concurrency check failed."""


class UnknownUserError(PhnError):
    pass


@dataclass(frozen=True)
class Event:
    seq: int
    ts: str  # server time at append, ISO-8601
    type: str
    payload: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "type": self.type, "payload": self.payload},
            separators=(",", ":"),
            sort_keys=True,
        )


class UserStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._cache: dict[str, list[Event]] = {}
        self._registry_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def _lock(self, user_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(user_id, threading.Lock())

    def _path(self, user_id: str) -> Path:
        if not user_id or "/" in user_id or user_id.startswith("."):
            raise ValueError(f"bad user id {user_id!r}")
        return self.root / f"{user_id}.jsonl"

    def _load(self, user_id: str) -> list[Event]:
        if user_id in self._cache:
            return self._cache[user_id]
        path = self._path(user_id)
        events: list[Event] = []
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    doc = json.loads(line)
                    events.append(
                        Event(seq=doc["seq"], ts=doc["ts"], type=doc["type"], payload=doc["payload"])
                    )
        self._cache[user_id] = events
        return events

    # -- public API ---------------------------------------------------------

    def user_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def exists(self, user_id: str) -> bool:
        return self._path(user_id).exists() or bool(self._cache.get(user_id))

    def events(self, user_id: str) -> list[Event]:
        with self._lock(user_id):
            return list(self._load(user_id))

    def append(
        self,
        user_id: str,
        type: str,
        payload: dict[str, Any],
        expected_seq: Optional[int] = None,
    ) -> Event:
        if type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {type!r}")
        with self._lock(user_id):
            events = self._load(user_id)
            last_seq = events[-1].seq if events else 0
            if expected_seq is not None and expected_seq != last_seq:
                raise ConflictError(
                    f"expected seq {expected_seq} but log is at {last_seq}"
                )
            event = Event(
                seq=last_seq + 1,
                ts=datetime.now(timezone.utc).isoformat(),
                type=type,
                payload=payload,
            )
            with open(self._path(user_id), "a", encoding="utf-8") as fh:
                fh.write(event.to_json() + "\n")
                fh.flush()
            events.append(event)
            return event

    def drop_caches(self) -> None:
        """Forget in-memory state; next read replays the logs from disk."""
        with self._registry_lock:
            self._cache.clear()

    # -- derived views (recomputed from the log) -----------------------------

    def profile(self, user_id: str) -> UserProfile:
        docs = [e.payload for e in self.events(user_id) if e.type == "profile"]
        if not docs:
            raise UnknownUserError(f"no profile for user {user_id!r}")
        return UserProfile.from_dict(docs[-1])

    def samples(self, user_id: str) -> list[ingest.MinuteSample]:
        by_minute: dict[int, ingest.MinuteSample] = {}
        for e in self.events(user_id):
            if e.type != "samples":
                continue
            parsed = ingest.parse_stream(e.payload["csv"].splitlines())
            for s in parsed.samples:
                by_minute[ingest.epoch_minute(s.ts)] = s
        return [by_minute[m] for m in sorted(by_minute)]

    def tests(self, user_id: str) -> list[TestResult]:
        out = []
        for e in self.events(user_id):
            if e.type != "test":
                continue
            p = e.payload
            out.append(
                TestResult(
                    ts=datetime.fromisoformat(p["ts"]),
                    kind=p["kind"],
                    indicator=p["indicator"],
                    detail=p.get("detail", {}),
                )
            )
        return out

    def goal_roi(self, user_id: str) -> Optional[str]:
        labels = [e.payload["roi_label"] for e in self.events(user_id) if e.type == "goal"]
        return labels[-1] if labels else None

    def logged_workouts(self, user_id: str) -> dict[date, float]:
        """Daily TRIMP from explicitly logged workouts."""
        per_day: dict[date, float] = {}
        for e in self.events(user_id):
            if e.type != "workout":
                continue
            p = e.payload
            d = date.fromisoformat(p["date"])
            zones = (p["low_min"], p["med_min"], p["high_min"])
            per_day[d] = per_day.get(d, 0.0) + trainload.trimp_of_zones(zones)
        return per_day

    def daily_measured_trimp(self, user_id: str) -> dict[date, float]:
        """Measured daily TRIMP: logged workouts win on their dates,
        auto-segmented sessions from the sample stream fill the rest."""
        profile = self.profile(user_id)
        samples = self.samples(user_id)
        out: dict[date, float] = {}
        if samples:
            sessions = ingest.segment_exercise(samples, profile)
            for s in sessions:
                d = ingest.local_date(s.start, profile.timezone_offset_min)
                out[d] = out.get(d, 0.0) + trainload.trimp_of_zones(s.zone_minutes)
        out.update(self.logged_workouts(user_id))
        return out
