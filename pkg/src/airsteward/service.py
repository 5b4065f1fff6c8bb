"""HTTP service binding the modules into per-session closed loops.

Sessions are in-memory; within a session every request is serialized by
a lock, across sessions everything runs in parallel. Plan delivery uses
server-sent events whose concatenated chunk text is byte-identical (as
UTF-8) to the rendered semi-stream, so clients re-parse it with the
stream parser and obtain exactly the plan the session stored.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .backend import HttpBackendAdapter, extract_via_backend
from .config import AppConfig
from .extraction import SessionContext
from .planner import EnvInput, plan as run_planner
from .profiles import Household, apply as apply_records, load as load_household, \
    persist, snapshot
from .rubric import backend_source, file_source, planner_source, run_corpus
from .scenarios import (
    Scenario,
    builtin_scenario,
    builtin_scenario_names,
    load_corpus,
)
from .schema import (
    AuxFunction,
    AuxLevel,
    CommandSet,
    ControlPlan,
    DeviceMode,
    ReasoningChain,
    WindSensation,
    WindSpeed,
    canonical_json,
)
from .sim import SimState, apply_plan_to_device, perturb, step, tick_scheduler
from .streamparse import render

SSE_CHUNK_CHARS = 48


@dataclass
class Session:
    session_id: str
    scenario: Scenario
    household: Household
    ctx: SessionContext
    sim: SimState
    config: AppConfig
    current_plan: Optional[ControlPlan] = None
    current_chain: Optional[ReasoningChain] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def idle_plan(self) -> ControlPlan:
        """Neutral plan used to step the sim before any plan was requested."""
        kb = self.scenario.knowledge_base(self.config.kb)
        cmd = CommandSet(
            mode=DeviceMode.AUTO, setpoint_c=None, wind_speed=WindSpeed.AUTO,
            wind_sensation=WindSensation.NORMAL, air_fresh=AuxLevel.OFF,
            air_purification=AuxLevel.OFF, air_humidification=AuxLevel.OFF,
            air_sterilization=AuxLevel.OFF, tips="idle")
        return ControlPlan(cmd=cmd, threshold=kb.thresholds,
                           interval_time={aux: None for aux in AuxFunction})

    def state_payload(self) -> dict:
        active = tick_scheduler(self.sim, self.current_plan or self.idle_plan())
        return {
            "session_id": self.session_id,
            "clock_minutes": self.sim.clock_minutes,
            "indoor": self.sim.indoor.to_payload(),
            "device": self.sim.device.to_payload(),
            "active": {aux.value: on for aux, on in sorted(
                active.items(), key=lambda kv: kv[0].value)},
            "plan": self.current_plan.to_payload() if self.current_plan else None,
            # Exact canonical bytes of the stored plan; clients check the
            # stream's command region against this without re-serializing.
            "plan_canonical": canonical_json(self.current_plan.to_payload()).decode("utf-8")
            if self.current_plan else None,
            "chain": self.current_chain.to_payload() if self.current_chain else None,
        }


class CreateSessionBody(BaseModel):
    scenario: Optional[str] = None
    scenario_inline: Optional[dict] = None


class UtteranceBody(BaseModel):
    text: str


class AdvanceBody(BaseModel):
    minutes: float


class PerturbBody(BaseModel):
    deltas: dict[str, float]


class EvalBody(BaseModel):
    corpus: str
    candidate: str = "planner"
    report: Optional[str] = None


def create_app(config: Optional[AppConfig] = None) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="airsteward", version="0.1.0")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    app.state.config = config

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    def store_path(scenario: Scenario) -> Optional[Path]:
        if config.profile_dir is None or not scenario.scenario_id:
            return None
        return Path(config.profile_dir) / f"{scenario.scenario_id}.jsonl"

    @app.get("/scenarios")
    def list_scenarios() -> dict:
        return {"scenarios": builtin_scenario_names()}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        if body.scenario_inline is not None:
            try:
                scenario = Scenario.from_payload(body.scenario_inline, config.kb.hemisphere)
            except (KeyError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=f"bad scenario: {exc}")
        else:
            name = body.scenario or "demo"
            try:
                scenario = builtin_scenario(name)
            except FileNotFoundError:
                raise HTTPException(status_code=404, detail=f"unknown scenario {name!r}")
        # A persisted store for this scenario's household outlives service
        # restarts; the scenario snapshot only seeds the very first run.
        household = scenario.household
        store = store_path(scenario)
        if store is not None and store.exists():
            household = load_household(store)
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            scenario=scenario,
            household=household,
            ctx=SessionContext(),
            sim=SimState(indoor=scenario.env.indoor, device=scenario.device),
            config=config,
        )
        sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "scenario_id": scenario.scenario_id,
            "profile": snapshot(session.household),
            "state": session.state_payload(),
        }

    @app.post("/sessions/{session_id}/utterance")
    def handle_utterance(session_id: str, body: UtteranceBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            adapter = (HttpBackendAdapter(config.backend_url)
                       if config.backend_enabled() else None)
            result = extract_via_backend(body.text, session.ctx, adapter, config.lexicon)
            session.household = apply_records(
                result.records, session.household, datetime.now(timezone.utc))
            store = store_path(session.scenario)
            if store is not None:
                persist(session.household, store)
            return {
                "records": [r.to_payload() for r in result.records],
                "provenance": result.provenance,
                "profile": snapshot(session.household),
            }

    @app.post("/sessions/{session_id}/plan")
    def request_plan(session_id: str):
        session = get_session(session_id)
        with session.lock:
            scenario_kb = session.scenario.knowledge_base(config.kb)
            env = EnvInput(outdoor=session.scenario.env.outdoor,
                           indoor=session.sim.indoor,
                           season=session.scenario.env.season)
            new_plan, chain = run_planner(env, session.household,
                                          session.sim.device, scenario_kb)
            session.current_plan = new_plan
            session.current_chain = chain
            session.sim = replace(
                session.sim, device=apply_plan_to_device(session.sim.device, new_plan))
            rendered = render(chain, new_plan, config.sentinels).decode("utf-8")

        def event_stream() -> Iterator[str]:
            try:
                for start in range(0, len(rendered), SSE_CHUNK_CHARS):
                    chunk = rendered[start:start + SSE_CHUNK_CHARS]
                    yield "event: chunk\ndata: " + json.dumps({"chunk": chunk}) + "\n\n"
                yield "event: done\ndata: {}\n\n"
            except Exception as exc:  # pragma: no cover - transport failure path
                yield "event: error\ndata: " + json.dumps({"message": str(exc)}) + "\n\n"

        return StreamingResponse(event_stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    @app.get("/sessions/{session_id}/profile")
    def get_profile(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return {"profile": snapshot(session.household)}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return session.state_payload()

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody) -> dict:
        session = get_session(session_id)
        if body.minutes <= 0:
            raise HTTPException(status_code=400, detail="minutes must be positive")
        with session.lock:
            sim_plan = session.current_plan or session.idle_plan()
            dt = config.sim_dt_minutes
            remaining = body.minutes
            while remaining > 1e-9:
                step_dt = min(dt, remaining)
                session.sim = step(session.sim, sim_plan,
                                   session.scenario.env.outdoor,
                                   config.sim_params, step_dt)
                remaining -= step_dt
            return session.state_payload()

    @app.post("/sessions/{session_id}/perturb")
    def perturb_session(session_id: str, body: PerturbBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            try:
                session.sim = perturb(session.sim, body.deltas)
            except KeyError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return session.state_payload()

    @app.post("/eval/run")
    def eval_run(body: EvalBody) -> dict:
        corpus_path = Path(body.corpus)
        if not corpus_path.exists():
            raise HTTPException(status_code=404, detail=f"corpus not found: {corpus_path}")
        try:
            cases = load_corpus(corpus_path, config.kb.hemisphere)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        source = _candidate_source(body.candidate, config)
        report = run_corpus(cases, source, kb=config.kb, policy=config.pass_policy)
        if body.report:
            from .reporting import write_eval_outputs

            write_eval_outputs(report, body.report)
        return report.to_payload()

    if config.ui_dist and Path(config.ui_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=str(config.ui_dist), html=True), name="ui")

    return app


def _candidate_source(name: str, config: AppConfig):
    if name == "planner":
        return planner_source(config.kb)
    if name == "backend":
        if not config.backend_enabled():
            raise HTTPException(status_code=400,
                                detail="backend candidate requires AIRSTEWARD_BACKEND_URL")
        return backend_source(HttpBackendAdapter(config.backend_url), config.sentinels)
    path = Path(name)
    if path.exists():
        return file_source(path)
    raise HTTPException(status_code=400,
                        detail=f"candidate must be planner, backend, or a file path: {name}")
