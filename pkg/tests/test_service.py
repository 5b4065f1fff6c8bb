"""HTTP service: session lifecycle, SSE plan streams, closed-loop steering."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from airsteward.config import AppConfig
from airsteward.rubric import planner_source
from airsteward.scenarios import CorpusCase, builtin_scenario, dump_corpus
from airsteward.schema import canonical_json
from airsteward.service import create_app
from airsteward.streamparse import parse_semi_stream


@pytest.fixture()
def client():
    app = create_app(AppConfig())
    with TestClient(app) as test_client:
        yield test_client


def create_session(client, scenario="demo"):
    response = client.post("/sessions", json={"scenario": scenario})
    assert response.status_code == 200
    return response.json()


def collect_sse_chunks(client, session_id):
    chunks = []
    events = []
    with client.stream("POST", f"/sessions/{session_id}/plan") as response:
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/event-stream")
        current_event = None
        for line in response.iter_lines():
            if line.startswith("event: "):
                current_event = line[len("event: "):]
                events.append(current_event)
            elif line.startswith("data: ") and current_event == "chunk":
                chunks.append(json.loads(line[len("data: "):])["chunk"])
    return chunks, events


class TestSessions:
    def test_create_session_returns_profile_and_state(self, client):
        body = create_session(client)
        assert body["scenario_id"] == "demo"
        groups = [m["group"] for m in body["profile"]["members"]]
        assert "elderly" in groups
        assert body["state"]["plan"] is None

    def test_unknown_scenario_404(self, client):
        assert client.post("/sessions", json={"scenario": "nope"}).status_code == 404

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/deadbeef/state").status_code == 404
        assert client.post("/sessions/deadbeef/utterance",
                           json={"text": "hi"}).status_code == 404

    def test_inline_scenario(self, client):
        payload = builtin_scenario("nominal").to_payload()
        response = client.post("/sessions", json={"scenario_inline": payload})
        assert response.status_code == 200

    def test_scenario_listing(self, client):
        names = client.get("/scenarios").json()["scenarios"]
        assert {"demo", "nominal", "high_formaldehyde"} <= set(names)


class TestUtterance:
    def test_grandma_utterance_removes_asthma(self, client):
        session = create_session(client)
        sid = session["session_id"]
        elderly = next(m for m in session["profile"]["members"] if m["group"] == "elderly")
        assert [c["condition"] for c in elderly["conditions"]] == ["asthma"]
        response = client.post(f"/sessions/{sid}/utterance",
                               json={"text": "Grandma's asthma has cleared up"})
        body = response.json()
        assert body["provenance"] == "lexicon"
        elderly = next(m for m in body["profile"]["members"] if m["group"] == "elderly")
        assert elderly["conditions"] == []

    def test_empty_text_is_noop(self, client):
        session = create_session(client)
        sid = session["session_id"]
        body = client.post(f"/sessions/{sid}/utterance", json={"text": ""}).json()
        assert body["records"] == []
        assert body["profile"] == session["profile"]

    def test_gibberish_unchanged_profile(self, client):
        session = create_session(client)
        sid = session["session_id"]
        body = client.post(f"/sessions/{sid}/utterance",
                           json={"text": "purple monkeys dishwasher"}).json()
        assert body["records"] == []
        assert body["profile"] == session["profile"]


class TestPlanStream:
    def test_stream_round_trips_to_stored_plan(self, client):
        sid = create_session(client)["session_id"]
        chunks, events = collect_sse_chunks(client, sid)
        assert events[-1] == "done"
        text = "".join(chunks)
        chain, plan_obj = parse_semi_stream(text.encode("utf-8"))
        state = client.get(f"/sessions/{sid}/state").json()
        assert canonical_json(state["plan"]) == canonical_json(plan_obj.to_payload())
        assert canonical_json(state["chain"]) == canonical_json(chain.to_payload())
        # The raw command region is byte-identical to the stored canonical plan.
        command_region = text.split("<COMMAND>")[1].split("</COMMAND>")[0]
        assert command_region == state["plan_canonical"]

    def test_single_char_reassembly_same_plan(self, client):
        # The client may consume the stream text one character at a time.
        sid = create_session(client)["session_id"]
        chunks, _ = collect_sse_chunks(client, sid)
        text = "".join(chunks)
        rebuilt = "".join(text[i] for i in range(len(text)))
        _, plan_obj = parse_semi_stream(rebuilt.encode("utf-8"))
        state = client.get(f"/sessions/{sid}/state").json()
        assert canonical_json(state["plan"]) == canonical_json(plan_obj.to_payload())

    def test_repeated_request_with_unchanged_state_identical(self, client):
        sid = create_session(client)["session_id"]
        chunks_a, _ = collect_sse_chunks(client, sid)
        chunks_b, _ = collect_sse_chunks(client, sid)
        assert "".join(chunks_a) == "".join(chunks_b)

    def test_plan_applied_to_device(self, client):
        sid = create_session(client)["session_id"]
        collect_sse_chunks(client, sid)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["device"]["power"] is True
        assert state["device"]["mode"] == state["plan"]["cmd"]["mode"]


class TestSteering:
    def test_advance_steps_clock(self, client):
        sid = create_session(client)["session_id"]
        state = client.post(f"/sessions/{sid}/advance", json={"minutes": 5}).json()
        assert state["clock_minutes"] == 5

    def test_advance_rejects_nonpositive(self, client):
        sid = create_session(client)["session_id"]
        assert client.post(f"/sessions/{sid}/advance",
                           json={"minutes": 0}).status_code == 400

    def test_perturb_unknown_quantity_400(self, client):
        sid = create_session(client)["session_id"]
        response = client.post(f"/sessions/{sid}/perturb", json={"deltas": {"radon": 5}})
        assert response.status_code == 400

    def test_co2_injection_forces_fresh_air_override(self, client):
        sid = create_session(client)["session_id"]
        collect_sse_chunks(client, sid)  # plan: air_fresh scheduled {30, 120}
        client.post(f"/sessions/{sid}/advance", json={"minutes": 35})  # rest phase
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["active"]["air_fresh"] is False
        state = client.post(f"/sessions/{sid}/perturb",
                            json={"deltas": {"co2_ppm": 900}}).json()
        assert state["indoor"]["co2_ppm"] > state["plan"]["threshold"]["co2_ppm"]
        assert state["active"]["air_fresh"] is True

    def test_advance_on_fresh_session_deterministic(self, client):
        sid_a = create_session(client, "nominal")["session_id"]
        sid_b = create_session(client, "nominal")["session_id"]
        state_a = client.post(f"/sessions/{sid_a}/advance", json={"minutes": 10}).json()
        state_b = client.post(f"/sessions/{sid_b}/advance", json={"minutes": 10}).json()
        assert state_a["indoor"] == state_b["indoor"]


class TestProfilePersistence:
    def test_restart_reproduces_household(self, tmp_path):
        config = AppConfig()
        config.profile_dir = tmp_path
        with TestClient(create_app(config)) as first:
            sid = create_session(first)["session_id"]
            first.post(f"/sessions/{sid}/utterance",
                       json={"text": "Grandma's asthma has cleared up"})
        # New app instance = service restart; same profile directory.
        with TestClient(create_app(config)) as second:
            body = create_session(second)
            elderly = next(m for m in body["profile"]["members"]
                           if m["group"] == "elderly")
            assert elderly["conditions"] == []

    def test_without_profile_dir_scenario_reseeds(self):
        config = AppConfig()
        with TestClient(create_app(config)) as first:
            sid = create_session(first)["session_id"]
            first.post(f"/sessions/{sid}/utterance",
                       json={"text": "Grandma's asthma has cleared up"})
        with TestClient(create_app(config)) as second:
            body = create_session(second)
            elderly = next(m for m in body["profile"]["members"]
                           if m["group"] == "elderly")
            assert [c["condition"] for c in elderly["conditions"]] == ["asthma"]


class TestEvalEndpoint:
    def test_eval_run_planner_candidate(self, client, tmp_path, kb):
        cases = []
        for i, name in enumerate(("nominal", "demo", "high_formaldehyde")):
            scenario = builtin_scenario(name)
            source = planner_source(kb)
            case = CorpusCase(case_id=f"case-{i}", scenario=scenario,
                              truth_plan=None, truth_chain=None)
            candidate = source(case)
            cases.append(CorpusCase(case_id=f"case-{i}", scenario=scenario,
                                    truth_plan=candidate.plan,
                                    truth_chain=candidate.chain))
        corpus_path = tmp_path / "corpus.jsonl"
        dump_corpus(cases, corpus_path)
        response = client.post("/eval/run", json={"corpus": str(corpus_path)})
        assert response.status_code == 200
        body = response.json()
        assert body["n_cases"] == 3
        assert body["pass_rate"] == 1.0

    def test_eval_missing_corpus_404(self, client):
        assert client.post("/eval/run",
                           json={"corpus": "/nope/missing.jsonl"}).status_code == 404
