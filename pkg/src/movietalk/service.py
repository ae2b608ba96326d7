"""HTTP chat service: live conversations against frozen policies.

Sessions run the same turn pipeline as training but greedily and without
learning. Every processed message appends a full conversation snapshot to an
append-only JSONL log; the last record per session replays the transcript.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import DialogError, EndReason, Speaker, finish
from .engine import DialogEngine, SessionState, observe_user, open_conversation
from .kb import default_kb, load_kb
from .nontaskgen import build_index, default_interview_index, default_subtitle_index
from .policy import PolicyConfig, QTable, Variant
from .reward import information_gain
import random


class ServiceError(DialogError):
    status_code = 400
    code = "BadRequest"


class UnknownVariant(ServiceError):
    status_code = 400
    code = "UnknownVariant"


class SessionNotFound(ServiceError):
    status_code = 404
    code = "SessionNotFound"


class SessionClosed(ServiceError):
    status_code = 409
    code = "SessionClosed"


class EmptyMessage(ServiceError):
    status_code = 400
    code = "EmptyMessage"


class RatingOutOfRange(ServiceError):
    status_code = 400
    code = "RatingOutOfRange"


@dataclass
class ServiceSettings:
    """Where the service finds its models and writes its log.

    Environment variables override: MOVIETALK_MODEL_DIR, MOVIETALK_LOG_PATH,
    MOVIETALK_KB_PATH, MOVIETALK_PORT.
    """

    model_dir: Path = Path("models")
    log_path: Path = Path("sessions.jsonl")
    kb_path: Optional[Path] = None
    interview_corpus: Optional[Path] = None
    subtitle_corpus: Optional[Path] = None
    port: int = 8000

    @classmethod
    def from_env(cls, config_path: Optional[str] = None) -> "ServiceSettings":
        data = {}
        if config_path:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        settings = cls(
            model_dir=Path(data.get("model_dir", "models")),
            log_path=Path(data.get("log_path", "sessions.jsonl")),
            kb_path=Path(data["kb_path"]) if data.get("kb_path") else None,
            port=int(data.get("port", 8000)),
        )
        if os.environ.get("MOVIETALK_MODEL_DIR"):
            settings.model_dir = Path(os.environ["MOVIETALK_MODEL_DIR"])
        if os.environ.get("MOVIETALK_LOG_PATH"):
            settings.log_path = Path(os.environ["MOVIETALK_LOG_PATH"])
        if os.environ.get("MOVIETALK_KB_PATH"):
            settings.kb_path = Path(os.environ["MOVIETALK_KB_PATH"])
        if os.environ.get("MOVIETALK_PORT"):
            settings.port = int(os.environ["MOVIETALK_PORT"])
        return settings


@dataclass
class Session:
    session_id: str
    variant: Variant
    state: SessionState
    closed: bool = False
    rating: Optional[int] = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class TranscriptLog:
    """Append-only JSONL persistence; one conversation snapshot per record."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, session: Session, event: str, fsync: bool = False) -> None:
        record = {
            "session_id": session.session_id,
            "variant": session.variant.value,
            "event": event,
            "rating": session.rating,
            "conversation": json.loads(session.state.conversation.to_json()),
        }
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                if fsync:
                    fh.flush()
                    os.fsync(fh.fileno())

    def replay(self, session_id: str) -> Optional[dict]:
        """Latest logged record for a session, or None."""
        if not self.path.exists():
            return None
        last = None
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record.get("session_id") == session_id:
                    last = record
        return last


class ChatService:
    """Session store plus one frozen DialogEngine per served variant."""

    def __init__(self, settings: ServiceSettings):
        self.settings = settings
        kb = load_kb(settings.kb_path) if settings.kb_path else default_kb()
        interview = (build_index(settings.interview_corpus)
                     if settings.interview_corpus else default_interview_index())
        subtitles = (build_index(settings.subtitle_corpus)
                     if settings.subtitle_corpus else default_subtitle_index())
        self.engines: dict[Variant, DialogEngine] = {}
        for variant in Variant:
            table_path = Path(settings.model_dir) / f"qtable_{variant.value}.json"
            if table_path.exists():
                qtable = QTable.load(table_path)
                self.engines[variant] = DialogEngine(
                    PolicyConfig(variant=variant), qtable, kb, interview, subtitles)
        self.log = TranscriptLog(settings.log_path)
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        self._rng = random.Random(0)  # greedy serving; rng only breaks ties

    def engine_for(self, variant_name: str) -> tuple[Variant, DialogEngine]:
        try:
            variant = Variant(variant_name)
        except ValueError:
            raise UnknownVariant(f"unknown variant {variant_name!r}") from None
        engine = self.engines.get(variant)
        if engine is None:
            raise UnknownVariant(
                f"no frozen policy table is loaded for {variant.value}")
        return variant, engine

    def create_session(self, variant_name: str) -> Session:
        variant, engine = self.engine_for(variant_name)
        session_id = uuid.uuid4().hex
        state = open_conversation(f"session-{session_id}", engine.kb)
        session = Session(session_id=session_id, variant=variant, state=state)
        with self._store_lock:
            self.sessions[session_id] = session
        self.log.append(session, "create")
        return session

    def _get(self, session_id: str) -> Session:
        with self._store_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise SessionNotFound(f"no session {session_id!r}")
        return session

    def post_message(self, session_id: str, text: str) -> dict:
        session = self._get(session_id)
        if not text or not text.strip():
            raise EmptyMessage("message text must be non-empty")
        with session.lock:
            if session.closed:
                raise SessionClosed(f"session {session_id} is closed")
            engine = self.engines[session.variant]
            observe_user(session.state, text.strip(), engine.kb)
            outcome = engine.system_step(session.state, epsilon=0.0, rng=self._rng)
            if outcome is None:
                # task-only variant with nothing left to say: close politely
                reply = {
                    "text": "Thank you for talking with me. Enjoy the movie!",
                    "strategy_id": None,
                    "source": None,
                    "task_complete": session.state.progress.task_success,
                }
                self.log.append(session, "message")
                return reply
            self.log.append(session, "message")
            return {
                "text": outcome.candidate.text,
                "strategy_id": outcome.candidate.strategy.value,
                "source": outcome.candidate.source.value,
                "task_complete": session.state.progress.task_success,
            }

    def close_session(self, session_id: str, rating: Optional[int] = None) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.closed:
                raise SessionClosed(f"session {session_id} is already closed")
            if rating is not None and not (1 <= rating <= 5):
                raise RatingOutOfRange(f"rating must be 1..5, got {rating}")
            session.closed = True
            session.rating = rating
            if not session.state.conversation.ended:
                reason = (EndReason.TASK_COMPLETE
                          if session.state.progress.task_success
                          else EndReason.USER_QUIT)
                session.state.conversation = finish(session.state.conversation, reason)
            self.log.append(session, "close", fsync=True)
            conv = session.state.conversation
            return {
                "conv_len": len(conv),
                "info_gain": information_gain(conv),
                "task_success": session.state.progress.task_success,
                "rating": rating,
            }

    def transcript(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return json.loads(session.state.conversation.to_json())


class CreateSessionBody(BaseModel):
    variant: str


class MessageBody(BaseModel):
    text: str


class CloseBody(BaseModel):
    rating: Optional[int] = None


def create_app(settings: Optional[ServiceSettings] = None) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    service = ChatService(settings)
    app = FastAPI(title="movietalk chat service")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": exc.code, "message": str(exc)},
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = service.create_session(body.variant)
        opener = session.state.conversation.utterances[0]
        return {
            "session_id": session.session_id,
            "opener": {
                "text": opener.text,
                "strategy_id": opener.strategy.value,
                "source": "nontask",
            },
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        return service.post_message(session_id, body.text)

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str, body: CloseBody):
        return service.close_session(session_id, body.rating)

    @app.get("/sessions/{session_id}")
    def get_transcript(session_id: str):
        return service.transcript(session_id)

    return app


def main() -> None:
    import uvicorn

    settings = ServiceSettings.from_env(os.environ.get("MOVIETALK_CONFIG"))
    uvicorn.run(create_app(settings), host="0.0.0.0", port=settings.port)


if __name__ == "__main__":
    main()
