import json

import pytest
from fastapi.testclient import TestClient

from movietalk.core import Conversation, StrategyId
from movietalk.engine import OPENER_TEXT
from movietalk.policy import QTable, Variant
from movietalk.service import ServiceSettings, create_app


@pytest.fixture()
def app_client(tmp_path):
    model_dir = tmp_path / "models"
    model_dir.mkdir()
    for variant in Variant:
        QTable(actions=variant.actions).save(
            model_dir / f"qtable_{variant.value}.json")
    settings = ServiceSettings(
        model_dir=model_dir, log_path=tmp_path / "sessions.jsonl")
    app = create_app(settings)
    with TestClient(app) as client:
        yield client, settings


# with an all-zero table the greedy tie-break walks the templates in order,
# so these replies drive all eight while staying on topic
SCRIPT = [
    ("I like watching movies too.", StrategyId.ELICIT_MOVIE_TYPE),
    ("I like superhero movies.", StrategyId.INTRODUCE_FAVORITE_SUPERHERO),
    ("I like Spider-man.", StrategyId.GROUND_ON_SUPERHERO),
    ("Yes, I liked The Avengers a lot.", StrategyId.DISCUSS_RELEVANT_MOVIE),
    ("Yes, I saw it a while ago.", StrategyId.DISCUSS_MOVIE_DETAIL),
    ("That is interesting.", StrategyId.SAW_THE_MOVIE),
    ("No, I haven't seen that movie yet.", StrategyId.PROMOTE_THE_MOVIE),
    ("That sounds nice.", StrategyId.INVITE_TO_MOVIE),
]


class TestCreateSession:
    def test_opener_is_fixed_greeting(self, app_client):
        client, _ = app_client
        resp = client.post("/sessions", json={"variant": "MixGlobal"})
        assert resp.status_code == 201
        body = resp.json()
        assert body["opener"]["text"] == OPENER_TEXT
        assert body["opener"]["strategy_id"] == "ActiveParticipation"

    def test_unknown_variant(self, app_client):
        client, _ = app_client
        resp = client.post("/sessions", json={"variant": "SuperGlobal"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "UnknownVariant"

    def test_distinct_session_ids(self, app_client):
        client, _ = app_client
        first = client.post("/sessions", json={"variant": "MixGlobal"}).json()
        second = client.post("/sessions", json={"variant": "MixGlobal"}).json()
        assert first["session_id"] != second["session_id"]


class TestPostMessage:
    def test_reply_contract(self, app_client):
        client, _ = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]
        resp = client.post(f"/sessions/{session_id}/messages",
                           json={"text": "I like superhero movies."})
        assert resp.status_code == 200
        body = resp.json()
        assert body["text"]
        assert body["source"] in ("task", "nontask")
        assert isinstance(body["task_complete"], bool)

    def test_empty_message_rejected(self, app_client):
        client, _ = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]
        resp = client.post(f"/sessions/{session_id}/messages", json={"text": "   "})
        assert resp.status_code == 400
        assert resp.json()["code"] == "EmptyMessage"

    def test_unknown_session(self, app_client):
        client, _ = app_client
        resp = client.post("/sessions/nope/messages", json={"text": "hello"})
        assert resp.status_code == 404

    def test_closed_session_rejects_messages(self, app_client):
        client, _ = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]
        client.post(f"/sessions/{session_id}/close", json={})
        resp = client.post(f"/sessions/{session_id}/messages", json={"text": "hi"})
        assert resp.status_code == 409
        assert resp.json()["code"] == "SessionClosed"


class TestCloseSession:
    def test_rating_persisted(self, app_client):
        client, settings = app_client
        session_id = client.post(
            "/sessions", json={"variant": "TaskGlobal"}).json()["session_id"]
        resp = client.post(f"/sessions/{session_id}/close", json={"rating": 5})
        assert resp.status_code == 200
        body = resp.json()
        assert body["rating"] == 5
        assert {"conv_len", "info_gain", "task_success"} <= set(body)
        log_lines = settings.log_path.read_text().splitlines()
        last = json.loads(log_lines[-1])
        assert last["event"] == "close"
        assert last["rating"] == 5

    def test_rating_out_of_range(self, app_client):
        client, _ = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]
        resp = client.post(f"/sessions/{session_id}/close", json={"rating": 7})
        assert resp.status_code == 400
        assert resp.json()["code"] == "RatingOutOfRange"

    def test_close_without_rating(self, app_client):
        client, _ = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]
        body = client.post(f"/sessions/{session_id}/close", json={}).json()
        assert body["rating"] is None


class TestScriptedRoundTrip:
    def test_full_task_conversation(self, app_client):
        client, settings = app_client
        session_id = client.post(
            "/sessions", json={"variant": "MixGlobal"}).json()["session_id"]

        completed = False
        for text, expected_strategy in SCRIPT:
            body = client.post(f"/sessions/{session_id}/messages",
                               json={"text": text}).json()
            assert body["strategy_id"] == expected_strategy.value, (
                f"after {text!r} expected {expected_strategy.value}, "
                f"got {body['strategy_id']}: {body['text']!r}")
            completed = completed or body["task_complete"]
        assert completed

        answer = client.post(f"/sessions/{session_id}/messages",
                             json={"text": "Yes, I would love to."}).json()
        assert answer["task_complete"]

        summary = client.post(f"/sessions/{session_id}/close",
                              json={"rating": 5}).json()
        assert summary["task_success"] is True
        assert summary["rating"] == 5

        # the persisted log replays byte-identically to the served transcript
        transcript = client.get(f"/sessions/{session_id}").json()
        last = None
        for line in settings.log_path.read_text().splitlines():
            record = json.loads(line)
            if record["session_id"] == session_id:
                last = record
        assert last is not None
        assert last["conversation"] == transcript
        replayed = Conversation.from_json(json.dumps(last["conversation"]))
        assert replayed.to_json() == json.dumps(
            transcript, sort_keys=True, ensure_ascii=False)


class TestSettings:
    def test_env_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MOVIETALK_MODEL_DIR", str(tmp_path / "m"))
        monkeypatch.setenv("MOVIETALK_PORT", "9111")
        settings = ServiceSettings.from_env()
        assert settings.model_dir == tmp_path / "m"
        assert settings.port == 9111
