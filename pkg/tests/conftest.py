from datetime import date, datetime, timedelta, timezone

import pytest

from phn import hse
from phn.knowledge import KnowledgeBank


@pytest.fixture(scope="session")
def bank() -> KnowledgeBank:
    return KnowledgeBank.default()


@pytest.fixture
def profile() -> hse.UserProfile:
    return hse.UserProfile(
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


def minute_lines(start: datetime, rows):
    """CSV lines from (hr, steps, mode, stage) tuples, one per minute."""
    lines = []
    for i, (hr, steps, mode, stage) in enumerate(rows):
        ts = (start + timedelta(minutes=i)).strftime("%Y-%m-%dT%H:%M") + "Z"
        hr_s = "" if hr is None else str(hr)
        lines.append(f"{ts},{hr_s},{steps},{mode},{stage}")
    return lines


def utc(y, m, d, hh=0, mm=0) -> datetime:
    return datetime(y, m, d, hh, mm, tzinfo=timezone.utc)


@pytest.fixture
def sample_week(profile):
    """Seven days of synthetic samples: nightly sleep with deep HR 55,
    a 40-minute run each day at 60% of max HR."""
    from phn import ingest

    lines = []
    for day in range(7):
        base = utc(2021, 3, 1) + timedelta(days=day)
        rows = []
        for i in range(420):  # 7 h sleep from midnight
            stage = "deep" if 60 <= i < 150 else "light"
            rows.append((55 if stage == "deep" else 58, 0, "still", stage))
        lines += minute_lines(base, rows)
        run_hr = int(0.60 * profile.max_hr)
        rows = [(run_hr, 150, "running", "none") for _ in range(40)]
        lines += minute_lines(base + timedelta(hours=18), rows)
    parsed = ingest.parse_stream(lines)
    assert not parsed.rejects
    return parsed.samples
