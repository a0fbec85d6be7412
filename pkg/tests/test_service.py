import json
import threading

import pytest
from fastapi.testclient import TestClient

from dotdialog.context import generate_context
from dotdialog.service import create_app
from dotdialog.writer import SELECT_MARKER

FORBIDDEN_PRE_CLOSE = {"shared", "partner_scene", "agent_scene", "plan", "eig_trace",
                       "program", "belief", "interpretations"}


@pytest.fixture()
def client(tmp_path):
    app = create_app(transcript_dir=str(tmp_path / "transcripts"))
    with TestClient(app) as c:
        yield c


def scan_keys(payload):
    keys = set()
    if isinstance(payload, dict):
        for key, value in payload.items():
            keys.add(key)
            keys |= scan_keys(value)
    elif isinstance(payload, list):
        for item in payload:
            keys |= scan_keys(item)
    return keys


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_create_session_hides_everything_but_own_scene(client):
    response = client.post("/sessions", json={"k": 4, "seed": 5})
    assert response.status_code == 200
    body = response.json()
    assert len(body["scene"]["dots"]) == 7
    assert not scan_keys(body) & FORBIDDEN_PRE_CLOSE
    # the payload matches the partner view of the same seed
    ctx = generate_context(5, k=4, n_per_view=7)
    payload_ids = {d["id"] for d in body["scene"]["dots"]}
    assert payload_ids == set(ctx.partner_scene.ids())


def test_same_seed_distinct_sessions_same_board(client):
    a = client.post("/sessions", json={"seed": 9}).json()
    b = client.post("/sessions", json={"seed": 9}).json()
    assert a["session_id"] != b["session_id"]
    assert a["scene"] == b["scene"]


def test_invalid_k(client):
    response = client.post("/sessions", json={"k": 9, "n_per_view": 7})
    assert response.status_code == 422


def test_empty_utterance_rejected(client):
    sid = client.post("/sessions", json={"seed": 1}).json()["session_id"]
    response = client.post(f"/sessions/{sid}/utterance", json={"text": ""})
    assert response.status_code == 422


def test_utterance_reply_and_result_flow(client):
    sid = client.post("/sessions", json={"seed": 2}).json()["session_id"]
    reply = client.post(f"/sessions/{sid}/utterance",
                        json={"text": "Do you see a lone large dark dot?"})
    assert reply.status_code == 200
    body = reply.json()
    assert body["kind"] in ("utterance", "selection")
    assert body["text"]
    result = client.post(f"/sessions/{sid}/selection", json={"dot_id":
                         client.post("/sessions", json={"seed": 2}).json()["scene"]["dots"][0]["id"]})
    # note: dot ids come from the same seed's partner scene
    assert result.status_code == 200
    assert set(result.json()) == {"success", "agent_selection", "partner_selection",
                                  "turn_count"}


def test_select_phrase_brings_selection_notice(client):
    sid = client.post("/sessions", json={"seed": 3}).json()["session_id"]
    client.post(f"/sessions/{sid}/utterance",
                json={"text": "Do you see a pair of medium sized dots?"})
    reply = client.post(f"/sessions/{sid}/utterance",
                        json={"text": "Let's select the medium size and grey color one."})
    assert reply.status_code == 200
    assert reply.json()["kind"] == "selection"


def test_unknown_session(client):
    assert client.get("/sessions/nope/transcript").status_code == 404
    assert client.post("/sessions/nope/utterance", json={"text": "hi"}).status_code == 404


def test_unknown_dot_selection(client):
    created = client.post("/sessions", json={"seed": 4}).json()
    sid = created["session_id"]
    ids = {d["id"] for d in created["scene"]["dots"]}
    bad = max(ids) + 99
    assert client.post(f"/sessions/{sid}/selection", json={"dot_id": bad}).status_code == 404


def test_selection_closes_session(client):
    created = client.post("/sessions", json={"seed": 6}).json()
    sid = created["session_id"]
    dot_id = created["scene"]["dots"][0]["id"]
    first = client.post(f"/sessions/{sid}/selection", json={"dot_id": dot_id})
    assert first.status_code == 200
    again = client.post(f"/sessions/{sid}/selection", json={"dot_id": dot_id})
    assert again.status_code == 409
    talk = client.post(f"/sessions/{sid}/utterance", json={"text": "hello"})
    assert talk.status_code == 409


def test_transcript_hides_internal_fields_until_close(client):
    created = client.post("/sessions", json={"seed": 7}).json()
    sid = created["session_id"]
    client.post(f"/sessions/{sid}/utterance",
                json={"text": "Do you see a lone medium sized grey dot?"})
    pre = client.get(f"/sessions/{sid}/transcript")
    assert pre.status_code == 200
    pre_body = pre.json()
    assert pre_body["closed"] is False
    assert not scan_keys(pre_body) & FORBIDDEN_PRE_CLOSE
    # close, then the hidden fields appear
    dot_id = created["scene"]["dots"][0]["id"]
    client.post(f"/sessions/{sid}/selection", json={"dot_id": dot_id})
    post = client.get(f"/sessions/{sid}/transcript").json()
    assert post["closed"] is True
    assert "shared" in post
    assert post["result"] is not None
    agent_turns = [t for t in post["turns"] if t["speaker"] == "agent"]
    assert any(t.get("plan") for t in agent_turns)
    assert any(t.get("eig_trace") for t in agent_turns)


def test_full_game_over_http(client):
    created = client.post("/sessions", json={"seed": 8}).json()
    sid = created["session_id"]
    replies = []
    text = "Do you see a pair of dots, where the left dot is small-sized and grey and the right dot is medium-sized and light?"
    for _ in range(12):
        response = client.post(f"/sessions/{sid}/utterance", json={"text": text})
        assert response.status_code == 200
        body = response.json()
        replies.append(body)
        if body["kind"] == "selection":
            break
        text = "Yes"
    assert replies[-1]["kind"] == "selection"
    # the human picks some dot; the game adjudicates and closes
    dot_id = created["scene"]["dots"][3]["id"]
    result = client.post(f"/sessions/{sid}/selection", json={"dot_id": dot_id}).json()
    assert isinstance(result["success"], bool)
    assert result["agent_selection"] is not None


def test_transcript_persisted_on_close(client, tmp_path):
    created = client.post("/sessions", json={"seed": 11}).json()
    sid = created["session_id"]
    client.post(f"/sessions/{sid}/utterance", json={"text": "Do you see a lone dark dot?"})
    client.post(f"/sessions/{sid}/selection",
                json={"dot_id": created["scene"]["dots"][0]["id"]})
    store = tmp_path / "transcripts" / "sessions.jsonl"
    assert store.exists()
    record = json.loads(store.read_text().splitlines()[-1])
    assert record["context"]["seed"] == 11
    assert record["result"] is not None


def test_out_of_turn_on_concurrent_posts(client):
    # simulate an in-flight turn by holding the session lock
    sid = client.post("/sessions", json={"seed": 12}).json()["session_id"]
    registry = client.app.state.registry
    live = registry.sessions[sid]
    live.lock.acquire()
    try:
        response = client.post(f"/sessions/{sid}/utterance", json={"text": "hello dot"})
        assert response.status_code == 409
        assert "turn" in response.json()["detail"]
    finally:
        live.lock.release()


def test_token_auth(tmp_path, monkeypatch):
    monkeypatch.setenv("DOTDIALOG_SERVICE_TOKEN", "sekrit")
    app = create_app(transcript_dir=str(tmp_path))
    with TestClient(app) as client:
        denied = client.post("/sessions", json={"seed": 0})
        assert denied.status_code == 401
        ok = client.post("/sessions", json={"seed": 0},
                         headers={"Authorization": "Bearer sekrit"})
        assert ok.status_code == 200
        # healthz stays open for probes
        assert client.get("/healthz").status_code == 200
