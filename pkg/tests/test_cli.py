import json
from datetime import timedelta

import pytest

from phn import cli
from phn.store import UserStore

from conftest import minute_lines, utc


@pytest.fixture
def profile_file(tmp_path):
    doc = {
        "age": 45, "sex": "male", "height_cm": 176.0, "weight_kg": 78.0,
        "smoker": False, "diabetic": False, "treated_bp": False,
        "total_chol": 200.0, "hdl": 50.0, "systolic_bp": 122.0,
    }
    path = tmp_path / "profile.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def samples_file(tmp_path):
    lines = []
    for day in range(7):
        base = utc(2021, 3, 1) + timedelta(days=day)
        rows = []
        for i in range(420):
            stage = "deep" if 60 <= i < 150 else "light"
            rows.append((55 if stage == "deep" else 58, 0, "still", stage))
        lines += minute_lines(base, rows)
        lines += minute_lines(base + timedelta(hours=18), [(105, 150, "running", "none")] * 20)
    path = tmp_path / "samples.csv"
    path.write_text("\n".join(lines))
    return str(path)


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--frobnicate"])
    assert exc.value.code == 2


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_domain_error_exits_1(tmp_path, profile_file):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    rc = cli.main(["ingest", "--input", str(empty), "--profile", profile_file])
    assert rc == 1


def test_ingest_structured_output(capsys, profile_file, samples_file):
    rc = cli.main(["ingest", "--input", samples_file, "--profile", profile_file])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rejected"] == 0
    assert len(doc["exercise_sessions"]) == 7
    assert doc["sleep_sessions"] == 7


def test_ingest_csv_output(capsys, profile_file, samples_file):
    rc = cli.main(
        ["ingest", "--input", samples_file, "--profile", profile_file, "--format", "csv"]
    )
    assert rc == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0].startswith("start,end,duration_min")
    assert len(out) == 8


def test_estimate_outputs_state(capsys, profile_file, samples_file):
    rc = cli.main(["estimate", "--profile", profile_file, "--samples", samples_file])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["resting_hr"] == 55.0
    assert doc["vo2max_indicator"] is None


def test_plan_routes_to_goal(capsys, profile_file, samples_file, tmp_path):
    tests_file = tmp_path / "tests.json"
    tests_file.write_text(json.dumps([{"ts": "2021-03-07T20:00:00", "kind": "step", "indicator": 45.0}]))
    rc = cli.main(
        ["plan", "--profile", profile_file, "--samples", samples_file,
         "--tests", str(tests_file), "--goal", "healthy_heart"]
    )
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["goal_roi"] == "healthy_heart"
    assert doc["routes"]


def test_simulate_deterministic_output_files(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["simulate", "--days", "21", "--seed", "7", "--out", str(out1)]) == 0
    assert cli.main(["simulate", "--days", "21", "--seed", "7", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_seed_changes_output(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["simulate", "--days", "21", "--seed", "1", "--p-follow", "0.8",
              "--noise-sd", "4", "--out", str(out1)])
    cli.main(["simulate", "--days", "21", "--seed", "2", "--p-follow", "0.8",
              "--noise-sd", "4", "--out", str(out2)])
    assert out1.read_bytes() != out2.read_bytes()


def test_guide_reads_store(tmp_path, capsys, profile_file, samples_file):
    store = UserStore(tmp_path / "store")
    store.append("u1", "profile", json.loads(open(profile_file).read()) | {
        "timezone_offset_min": 0, "max_hr_override": None,
    })
    store.append("u1", "samples", {"csv": open(samples_file).read()})
    rc = cli.main(
        ["guide", "--store", str(tmp_path / "store"), "--user", "u1", "--date", "2021-03-08"]
    )
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["date"] == "2021-03-08"
    assert doc["week"]["trimp_w"] > 0


def test_classify_synthetic_text_report(capsys):
    rc = cli.main(["classify", "--synthetic", "120", "--k", "4", "--seed", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "weighted" in out
    assert "Precision" in out


def test_classify_structured_report(capsys):
    rc = cli.main(["classify", "--synthetic", "120", "--k", "4", "--seed", "3",
                   "--format", "structured"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert 0 <= doc["cv_weighted"]["f1"] <= 1
