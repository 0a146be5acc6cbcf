"""Command-line interface.

Each subcommand is a thin wrapper over one library entry point:

    ingest    parse and quality-check a raw sample CSV
    estimate  compute the current health state
    plan      plan routes from the current state to a goal region
    guide     today's exercise guidance for a stored user
    simulate  run the closed-loop virtual-user harness
    classify  train/evaluate the exercise-response classifier
    serve     run the HTTP API

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__, guidance, hse, ingest, responder, service, sim, statespace
from .errors import PhnError
from .knowledge import KnowledgeBank
from .store import UserStore


def _load_profile(path: str) -> hse.UserProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return hse.UserProfile.from_dict(json.load(fh))


def _load_tests(path: str | None, profile: hse.UserProfile, bank: KnowledgeBank):
    if not path:
        return []
    with open(path, "r", encoding="utf-8") as fh:
        docs = json.load(fh)
    out = []
    for doc in docs:
        ts = datetime.fromisoformat(doc["ts"])
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        if "indicator" in doc:
            indicator = float(doc["indicator"])
        elif doc["kind"] == "step":
            indicator = hse.vo2max_step_test(doc["recovery_trace"], profile, bank).indicator
        else:
            indicator = hse.vo2max_walk_test(doc["distance_m"], profile, bank)
        out.append(hse.TestResult(ts=ts, kind=doc["kind"], indicator=indicator))
    return out


def _emit(doc, fmt: str) -> None:
    if fmt == "structured":
        print(json.dumps(doc, indent=2, default=str))
    else:
        print(doc)


def cmd_ingest(args) -> int:
    profile = _load_profile(args.profile)
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    parsed = ingest.parse_stream(lines)
    if args.rejects and parsed.rejects:
        Path(args.rejects).write_text(parsed.rejects_report() + "\n", encoding="utf-8")
    if not parsed.samples:
        raise PhnError("no valid samples in input")
    first = parsed.samples[0].ts
    last = parsed.samples[-1].ts
    days = (last.date() - first.date()).days + 1
    start = datetime.combine(first.date(), datetime.min.time(), timezone.utc)
    q = ingest.quality(parsed.samples, start, days)
    sessions = ingest.segment_exercise(parsed.samples, profile)
    sleeps = ingest.segment_sleep(parsed.samples)
    if args.format == "csv":
        print("start,end,duration_min,mean_hr,low_min,med_min,high_min")
        for s in sessions:
            z = s.zone_minutes
            print(
                f"{s.start.isoformat()},{s.end.isoformat()},{s.duration_min},"
                f"{s.mean_hr:.1f},{z[0]},{z[1]},{z[2]}"
            )
    else:
        _emit(
            {
                "samples": len(parsed.samples),
                "rejected": len(parsed.rejects),
                "quality": {
                    "continuity": q.continuity,
                    "accuracy": q.accuracy,
                    "span_days": q.span_days,
                },
                "exercise_sessions": [
                    {
                        "start": s.start.isoformat(),
                        "end": s.end.isoformat(),
                        "duration_min": s.duration_min,
                        "mean_hr": s.mean_hr,
                        "zone_minutes": list(s.zone_minutes),
                    }
                    for s in sessions
                ],
                "sleep_sessions": len(sleeps),
            },
            "structured",
        )
    return 0


def _state_from_files(args, bank: KnowledgeBank):
    profile = _load_profile(args.profile)
    lines = Path(args.samples).read_text(encoding="utf-8").splitlines()
    parsed = ingest.parse_stream(lines)
    tests = _load_tests(getattr(args, "tests", None), profile, bank)
    if args.at:
        now = datetime.fromisoformat(args.at).replace(tzinfo=timezone.utc)
    elif parsed.samples:
        now = parsed.samples[-1].ts
    else:
        now = datetime.now(timezone.utc)
    state = hse.estimate_health_state(profile, bank, parsed.samples, tests, now)
    return profile, state


def cmd_estimate(args) -> int:
    bank = KnowledgeBank.default() if not args.bank else KnowledgeBank.load(args.bank)
    _, state = _state_from_files(args, bank)
    _emit(
        {
            "ts": state.ts.isoformat(),
            "ascvd_risk_pct": state.ascvd_risk_pct,
            "vo2max_indicator": state.vo2max_indicator,
            "resting_hr": state.resting_hr,
            "confidence": {
                "risk_pct": state.confidence.risk_pct,
                "vo2": state.confidence.vo2,
            },
        },
        "structured",
    )
    return 0


def cmd_plan(args) -> int:
    bank = KnowledgeBank.default() if not args.bank else KnowledgeBank.load(args.bank)
    profile, state = _state_from_files(args, bank)
    ghss = statespace.ghss_from_bank(bank)
    phss = statespace.personalize(ghss, profile, bank)
    graph = statespace.discretize_and_label(phss, statespace.rois_from_bank(bank), bank)
    located = statespace.locate(state, graph)
    goal = guidance.goal_from_roi(graph, args.goal)
    routes = guidance.plan_routes(graph, located.index, goal, k=args.k)
    _emit(
        {
            "current_node": located.index,
            "clamped": located.clamped,
            "goal_roi": args.goal,
            "routes": [
                {
                    "nodes": list(r.nodes),
                    "total_cost_weeks": r.total_cost_weeks,
                    "input_labels": list(r.input_labels),
                }
                for r in routes
            ],
        },
        "structured",
    )
    return 0


def cmd_guide(args) -> int:
    bank = KnowledgeBank.default() if not args.bank else KnowledgeBank.load(args.bank)
    store = UserStore(args.store)
    plan, daily = service.guidance_for(store, bank, args.user, date.fromisoformat(args.date))
    doc = daily.to_dict()
    doc["week"] = {"week_start": plan.week_start.isoformat(), "trimp_w": plan.trimp_w}
    _emit(doc, "structured")
    return 0


def cmd_simulate(args) -> int:
    user = sim.default_virtual_user()
    if args.profile:
        user = sim.VirtualUser(
            profile=_load_profile(args.profile),
            physiology=user.physiology,
            adherence=user.adherence,
        )
    user = sim.VirtualUser(
        profile=user.profile,
        physiology=user.physiology,
        adherence=sim.AdherenceParams(
            p_follow=args.p_follow, intensity_noise_sd=args.noise_sd
        ),
    )
    config = sim.SimConfig(days=args.days, seed=args.seed, goal_roi=args.goal)
    trace = sim.run_closed_loop(user, config)
    trace.write_csv(args.out)
    print(f"wrote {args.out} ({len(trace.days)} days, {len(trace.plans)} weekly plans)")
    return 0


def cmd_classify(args) -> int:
    if args.data:
        dataset = responder.load_dataset(args.data, mode=args.mode)
    else:
        dataset = responder.make_synthetic_dataset(n=args.synthetic, seed=args.seed)
    train_idx, test_idx = responder.split(dataset.y, train_frac=0.75, seed=args.seed)
    X_train, y_train = dataset.X[train_idx], dataset.y[train_idx]
    if args.tune:
        hyper, cv = responder.tune_logreg(
            X_train, y_train, dataset.classes, k=args.k, repeats=args.repeats, seed=args.seed
        )
    else:
        hyper = responder.Hyper()
        cv = responder.cross_validate(
            X_train, y_train, dataset.classes,
            k=args.k, repeats=args.repeats, hyper=hyper, seed=args.seed,
        )
    model = responder.train_logreg(X_train, y_train, len(dataset.classes), hyper)
    holdout = responder.evaluate(model, dataset.X[test_idx], dataset.y[test_idx], dataset.classes)
    if args.format == "structured":
        _emit(
            {
                "hyper": {"learning_rate": hyper.learning_rate, "l2": hyper.l2},
                "cv_weighted": {
                    "precision": cv.weighted_precision,
                    "recall": cv.weighted_recall,
                    "f1": cv.weighted_f1,
                },
                "holdout_weighted": {
                    "precision": holdout.weighted_precision,
                    "recall": holdout.weighted_recall,
                    "f1": holdout.weighted_f1,
                },
            },
            "structured",
        )
    else:
        print(cv.to_text())
        print("\nheld-out test set:")
        print(holdout.to_text())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(UserStore(args.store), token=args.token)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and quality-check a raw sample CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--rejects", help="write the rejects report here")
    p.add_argument("--format", choices=("csv", "structured"), default="structured")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("estimate", help="estimate the current health state")
    p.add_argument("--profile", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--tests")
    p.add_argument("--at", help="estimate as of this ISO timestamp")
    p.add_argument("--bank")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("plan", help="plan routes toward a goal region")
    p.add_argument("--profile", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--tests")
    p.add_argument("--at")
    p.add_argument("--goal", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--bank")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("guide", help="daily guidance for a stored user")
    p.add_argument("--store", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--date", required=True)
    p.add_argument("--bank")
    p.set_defaults(func=cmd_guide)

    p = sub.add_parser("simulate", help="run the closed-loop harness")
    p.add_argument("--days", type=int, default=84)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile")
    p.add_argument("--out", required=True)
    p.add_argument("--p-follow", type=float, default=1.0, dest="p_follow")
    p.add_argument("--noise-sd", type=float, default=0.0, dest="noise_sd")
    p.add_argument("--goal", default="healthy_heart")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="exercise-response classifier")
    p.add_argument("--data", help="JSONL dataset; omit to use a synthetic one")
    p.add_argument("--synthetic", type=int, default=600, help="synthetic dataset size")
    p.add_argument("--mode", choices=("basic", "week1"), default="basic")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tune", action="store_true")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", default="phn-dev-token")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PhnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
