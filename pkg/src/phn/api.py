"""HTTP API binding the engine layers for the dashboard.

Static bearer-token auth, JSON bodies (CSV for sample uploads and the
loads export). Every GET is a pure function of the user's event log,
so responses survive log replay unchanged.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta, timezone
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request, Response

from . import guidance as guidance_mod
from . import hse, ingest, service, statespace, trainload
from .errors import PhnError
from .knowledge import KnowledgeBank
from .store import ConflictError, UnknownUserError, UserStore

DEFAULT_TOKEN = "phn-dev-token"


def create_app(
    store: UserStore,
    token: str = DEFAULT_TOKEN,
    bank: Optional[KnowledgeBank] = None,
) -> FastAPI:
    bank = bank or KnowledgeBank.default()
    knobs = guidance_mod.GuidanceKnobs.from_bank(bank)
    app = FastAPI(title="phn", version="0.1.0")

    def auth(authorization: str = Header(default="")) -> None:
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    def must_exist(user_id: str) -> None:
        if not store.exists(user_id):
            raise HTTPException(status_code=404, detail=f"unknown user {user_id!r}")

    @app.exception_handler(PhnError)
    async def domain_error(_request: Request, exc: PhnError):
        from fastapi.responses import JSONResponse

        status = 409 if isinstance(exc, ConflictError) else 422
        if isinstance(exc, UnknownUserError):
            status = 404
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def bad_value(_request: Request, exc: ValueError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # -- helpers -------------------------------------------------------------

    def graph_for(user_id: str) -> statespace.StateGraph:
        profile = store.profile(user_id)
        ghss = statespace.ghss_from_bank(bank)
        phss = statespace.personalize(ghss, profile, bank)
        return statespace.discretize_and_label(phss, statespace.rois_from_bank(bank), bank)

    def state_for(user_id: str, at: Optional[str]) -> hse.HealthState:
        profile = store.profile(user_id)
        samples = store.samples(user_id)
        if at:
            now = datetime.fromisoformat(at)
            if now.tzinfo is None:
                now = now.replace(tzinfo=timezone.utc)
        elif samples:
            now = samples[-1].ts + timedelta(minutes=1)
        else:
            now = datetime.now(timezone.utc)
        return hse.estimate_health_state(profile, bank, samples, store.tests(user_id), now)

    def state_json(state: hse.HealthState) -> dict:
        return {
            "ts": state.ts.isoformat(),
            "ascvd_risk_pct": state.ascvd_risk_pct,
            "vo2max_indicator": state.vo2max_indicator,
            "resting_hr": state.resting_hr,
            "confidence": {"risk_pct": state.confidence.risk_pct, "vo2": state.confidence.vo2},
        }

    # -- endpoints ------------------------------------------------------------

    @app.put("/users/{user_id}/profile", dependencies=[Depends(auth)])
    async def put_profile(user_id: str, request: Request):
        doc = await request.json()
        expected = doc.pop("expected_seq", None)
        profile = hse.UserProfile.from_dict(doc)  # validates
        event = store.append(user_id, "profile", profile.to_dict(), expected)
        return {"seq": event.seq}

    @app.post("/users/{user_id}/samples", dependencies=[Depends(auth)])
    async def post_samples(
        user_id: str, request: Request, expected_seq: Optional[int] = Query(default=None)
    ):
        must_exist(user_id)
        body = (await request.body()).decode("utf-8")
        parsed = ingest.parse_stream(body.splitlines())
        event = store.append(user_id, "samples", {"csv": body}, expected_seq)
        return {
            "seq": event.seq,
            "accepted": len(parsed.samples),
            "rejected": len(parsed.rejects),
            "rejects_report": parsed.rejects_report(),
        }

    @app.post("/users/{user_id}/tests", dependencies=[Depends(auth)])
    async def post_test(user_id: str, request: Request):
        must_exist(user_id)
        doc = await request.json()
        profile = store.profile(user_id)
        kind = doc.get("kind")
        ts = doc.get("ts") or datetime.now(timezone.utc).isoformat()
        if kind == "step":
            result = hse.vo2max_step_test(doc["recovery_trace"], profile, bank)
            indicator, detail = result.indicator, {"recovery_hr": result.recovery_hr}
        elif kind == "walk":
            indicator = hse.vo2max_walk_test(doc["distance_m"], profile, bank)
            detail = {"distance_m": doc["distance_m"]}
        else:
            raise HTTPException(status_code=400, detail="kind must be 'step' or 'walk'")
        event = store.append(
            user_id,
            "test",
            {"ts": ts, "kind": kind, "indicator": indicator, "detail": detail},
            doc.get("expected_seq"),
        )
        return {"seq": event.seq, "indicator": indicator, "detail": detail}

    @app.get("/users/{user_id}/state", dependencies=[Depends(auth)])
    def get_state(user_id: str, at: Optional[str] = Query(default=None)):
        must_exist(user_id)
        return state_json(state_for(user_id, at))

    @app.get("/users/{user_id}/statespace", dependencies=[Depends(auth)])
    def get_statespace(user_id: str, at: Optional[str] = Query(default=None)):
        must_exist(user_id)
        graph = graph_for(user_id)
        payload = graph.to_payload()
        # rule constants the dashboard displays but must never recompute
        payload["rules"] = {
            "tsb_optimal": [trainload.TSB_OPTIMAL, trainload.TSB_NEUTRAL],
            "tsb_rest_floor": knobs.tsb_rest_floor,
            "trimp_min": knobs.trimp_min,
        }
        try:
            located = statespace.locate(state_for(user_id, at), graph)
            payload["current_node"] = located.index
            payload["clamped"] = located.clamped
        except PhnError:
            payload["current_node"] = None
            payload["clamped"] = False
        payload["goal_roi"] = store.goal_roi(user_id)
        return payload

    @app.post("/users/{user_id}/goal", dependencies=[Depends(auth)])
    async def post_goal(user_id: str, request: Request):
        must_exist(user_id)
        doc = await request.json()
        label = doc.get("roi_label")
        if label not in {r["label"] for r in bank.rois}:
            raise HTTPException(status_code=400, detail=f"unknown ROI {label!r}")
        event = store.append(user_id, "goal", {"roi_label": label}, doc.get("expected_seq"))
        return {"seq": event.seq, "roi_label": label}

    @app.get("/users/{user_id}/routes", dependencies=[Depends(auth)])
    def get_routes(
        user_id: str,
        k: int = Query(default=3, ge=1, le=10),
        at: Optional[str] = Query(default=None),
    ):
        must_exist(user_id)
        label = store.goal_roi(user_id)
        if label is None:
            raise HTTPException(status_code=422, detail="no goal set")
        graph = graph_for(user_id)
        located = statespace.locate(state_for(user_id, at), graph)
        goal = guidance_mod.goal_from_roi(graph, label)
        routes = guidance_mod.plan_routes(graph, located.index, goal, k=k)
        return {
            "current_node": located.index,
            "clamped": located.clamped,
            "goal_roi": label,
            "routes": [
                {
                    "nodes": list(r.nodes),
                    "total_cost_weeks": r.total_cost_weeks,
                    "input_labels": list(r.input_labels),
                }
                for r in routes
            ],
        }

    @app.get("/users/{user_id}/guidance", dependencies=[Depends(auth)])
    def get_guidance(user_id: str, date_: str = Query(alias="date")):
        must_exist(user_id)
        day = date.fromisoformat(date_)
        plan, daily = service.guidance_for(store, bank, user_id, day, knobs)
        doc = daily.to_dict()
        doc["week"] = {
            "week_start": plan.week_start.isoformat(),
            "trimp_w": plan.trimp_w,
            "scaled_down": plan.scaled_down,
            "ramp_limited": plan.ramp_limited,
            "floor_overridden": plan.floor_overridden,
        }
        return doc

    @app.post("/users/{user_id}/workouts", dependencies=[Depends(auth)])
    async def post_workout(user_id: str, request: Request):
        must_exist(user_id)
        doc = await request.json()
        day = date.fromisoformat(doc["date"])
        zones = (
            float(doc.get("low_min", 0)),
            float(doc.get("med_min", 0)),
            float(doc.get("high_min", 0)),
        )
        trainload.Workout(day=day, zone_minutes=zones)  # validates
        event = store.append(
            user_id,
            "workout",
            {"date": day.isoformat(), "low_min": zones[0], "med_min": zones[1], "high_min": zones[2]},
            doc.get("expected_seq"),
        )
        return {"seq": event.seq, "trimp": trainload.trimp_of_zones(zones)}

    @app.get("/users/{user_id}/loads.csv", dependencies=[Depends(auth)])
    def get_loads(user_id: str):
        must_exist(user_id)
        return Response(content=service.loads_csv(store, user_id), media_type="text/csv")

    @app.post("/whatif", dependencies=[Depends(auth)])
    async def whatif(request: Request):
        doc = await request.json()
        user_id = doc["user_id"]
        must_exist(user_id)
        measured = store.daily_measured_trimp(user_id)
        plan = dict(measured)
        horizon = None
        for w in doc.get("workouts", []):
            d = date.fromisoformat(w["date"])
            zones = (
                float(w.get("low_min", 0)),
                float(w.get("med_min", 0)),
                float(w.get("high_min", 0)),
            )
            plan[d] = plan.get(d, 0.0) + trainload.trimp_of_zones(zones)
            horizon = d if horizon is None or d > horizon else horizon
        if not plan:
            return {"projection": []}
        states = trainload.update_loads(
            trainload.dense_daily_trimp(plan, min(plan), horizon or max(plan))
        )
        return {
            "projection": [
                {
                    "date": s.day.isoformat(),
                    "trimp": s.trimp_day,
                    "ctl": s.ctl,
                    "atl": s.atl,
                    "tsb": s.tsb,
                }
                for s in states
            ]
        }

    return app
