"""Session API for human-vs-agent play over HTTP.

The human plays the partner side and only ever receives their own scene;
nothing sent before a session closes contains the other view, the shared
set, or any agent-internal record that names agent dot ids. Each session's
state is mutated by at most one request at a time; a second concurrent post
gets an out-of-turn error instead of interleaved state.

Endpoints: POST /sessions, POST /sessions/{id}/utterance,
POST /sessions/{id}/selection, GET /sessions/{id}/transcript, GET /healthz.
"""

from __future__ import annotations

import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import transcripts
from .context import GameContext, GenerationInfeasibleError, Scene, generate_context
from .engine import EngineConfig, GameResult, GameSession, SessionClosedError
from .reader import GRAMMAR_BACKEND, ReaderBackend
from .writer import SELECT_MARKER

MAX_SESSIONS = 256
IDLE_EXPIRY_SECONDS = 1800.0
TOKEN_ENV = "DOTDIALOG_SERVICE_TOKEN"


# --- wire models ---------------------------------------------------------------

class DotPayload(BaseModel):
    id: int
    x: float
    y: float
    size: float
    color: float


class ScenePayload(BaseModel):
    dots: list[DotPayload]
    center: tuple[float, float]
    radius: float

    @classmethod
    def from_scene(cls, scene: Scene) -> "ScenePayload":
        return cls(
            dots=[DotPayload(id=d.id, x=d.x, y=d.y, size=d.size, color=d.color)
                  for d in scene.dots],
            center=scene.view_center,
            radius=scene.view_radius,
        )


class CreateSessionRequest(BaseModel):
    k: int = Field(default=4, ge=1)
    n_per_view: int = Field(default=7, ge=2, le=12)
    seed: int | None = None


class CreateSessionResponse(BaseModel):
    session_id: str
    scene: ScenePayload
    your_turn: bool = True


class UtteranceRequest(BaseModel):
    text: str = Field(min_length=1, max_length=2000)


class AgentReply(BaseModel):
    kind: Literal["utterance", "selection"]
    text: str


class SelectionRequest(BaseModel):
    dot_id: int


class ResultPayload(BaseModel):
    success: bool
    agent_selection: int | None
    partner_selection: int | None
    turn_count: int


class TurnPayload(BaseModel):
    index: int
    speaker: str
    text: str
    program: str | None = None
    plan: dict | None = None
    eig_trace: list | None = None
    fallback: bool = False


class TranscriptPayload(BaseModel):
    session_id: str
    closed: bool
    turns: list[TurnPayload]
    shared: list[int] | None = None
    result: ResultPayload | None = None


# --- session registry ------------------------------------------------------------

@dataclass
class LiveSession:
    session_id: str
    ctx: GameContext
    agent: GameSession
    log: list[tuple[str, str]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    closed: bool = False
    human_selection: int | None = None
    result: GameResult | None = None


class SessionRegistry:
    def __init__(self, engine_cfg: EngineConfig, backend: ReaderBackend,
                 transcript_dir: str | None = None):
        self.engine_cfg = engine_cfg
        self.backend = backend
        self.transcript_dir = transcript_dir
        self.sessions: dict[str, LiveSession] = {}
        self._lock = threading.Lock()

    def _purge(self) -> None:
        now = time.monotonic()
        stale = [sid for sid, s in self.sessions.items()
                 if now - s.last_access > IDLE_EXPIRY_SECONDS]
        for sid in stale:
            del self.sessions[sid]

    def create(self, req: CreateSessionRequest) -> LiveSession:
        with self._lock:
            self._purge()
            if len(self.sessions) >= MAX_SESSIONS:
                raise HTTPException(status_code=503, detail="session capacity reached")
            seed = req.seed if req.seed is not None else random.randrange(2 ** 31)
            try:
                ctx = generate_context(seed, k=req.k, n_per_view=req.n_per_view)
            except GenerationInfeasibleError as e:
                raise HTTPException(status_code=422, detail=str(e)) from e
            agent = GameSession(ctx.agent_scene, self.engine_cfg, self.backend,
                                shared_count=ctx.k)
            live = LiveSession(session_id=uuid.uuid4().hex, ctx=ctx, agent=agent)
            self.sessions[live.session_id] = live
            return live

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            self._purge()
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        session.last_access = time.monotonic()
        return session

    def persist(self, session: LiveSession) -> None:
        if not self.transcript_dir or session.result is None:
            return
        record = {
            "context": {"seed": session.ctx.seed, "k": session.ctx.k},
            "opener": "human",
            "turns": [t for t, _ in _merged_turns(session)],
            "result": transcripts.result_record(session.result),
        }
        path = Path(self.transcript_dir)
        path.mkdir(parents=True, exist_ok=True)
        transcripts.append_record(record, path / "sessions.jsonl")


def _merged_turns(session: LiveSession):
    """Pair each log message with the agent session's matching turn record:
    agent messages with the agent's own turns, human messages with the agent's
    reading of them. Yields (record_dict, Turn | None)."""
    own = [t for t in session.agent.history if t.speaker == session.agent.name]
    heard = [t for t in session.agent.history if t.speaker == "partner"]
    cursors = {"agent": 0, "human": 0}
    pools = {"agent": own, "human": heard}
    for i, (speaker, text) in enumerate(session.log):
        pool, cursor = pools[speaker], cursors[speaker]
        turn = None
        if cursor < len(pool) and pool[cursor].text == text:
            turn = pool[cursor]
            cursors[speaker] += 1
        if turn is not None:
            record = transcripts.turn_record(turn)
            record["index"] = record["timestamp"] = i
            record["speaker"] = speaker
        else:
            record = transcripts.bare_turn_record(i, speaker, text)
        yield record, turn


def _game_result(session: LiveSession) -> GameResult:
    agent_sel = session.agent.selection
    human_sel = session.human_selection
    success = agent_sel is not None and agent_sel == human_sel \
        and agent_sel in session.ctx.shared
    words: dict[str, list[int]] = {"agent": [], "human": []}
    spoken = 0
    for speaker, text in session.log:
        if text != SELECT_MARKER:
            words[speaker].append(len(text.split()))
            spoken += 1
    return GameResult(
        success=success,
        agent_selection=agent_sel,
        partner_selection=human_sel,
        turn_count=spoken,
        word_counts=tuple((s, tuple(w)) for s, w in sorted(words.items())),
    )


# --- application -----------------------------------------------------------------

def create_app(engine_cfg: EngineConfig | None = None,
               backend: ReaderBackend = GRAMMAR_BACKEND,
               transcript_dir: str | None = None) -> FastAPI:
    registry = SessionRegistry(engine_cfg or EngineConfig(), backend,
                               transcript_dir or os.environ.get("DOTDIALOG_TRANSCRIPT_DIR"))
    app = FastAPI(title="dotdialog", version="0.1.0")
    app.state.registry = registry
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def check_token(request: Request) -> None:
        token = os.environ.get(TOKEN_ENV)
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(registry.sessions)}

    @app.post("/sessions", response_model=CreateSessionResponse,
              dependencies=[Depends(check_token)])
    def create_session(req: CreateSessionRequest) -> CreateSessionResponse:
        live = registry.create(req)
        return CreateSessionResponse(
            session_id=live.session_id,
            scene=ScenePayload.from_scene(live.ctx.partner_scene),
        )

    @app.post("/sessions/{session_id}/utterance", response_model=AgentReply,
              dependencies=[Depends(check_token)])
    def post_utterance(session_id: str, req: UtteranceRequest) -> AgentReply:
        session = registry.get(session_id)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="out of turn: a turn is in progress")
        try:
            if session.closed:
                raise HTTPException(status_code=409, detail="session is closed")
            session.log.append(("human", req.text))
            had_selected = session.agent.selection is not None
            try:
                reply = session.agent.receive(req.text)
            except SessionClosedError:
                raise HTTPException(status_code=409, detail="session is closed")
            if reply is None:
                reply = SELECT_MARKER
            session.log.append(("agent", reply))
            selected_now = session.agent.selection is not None and not had_selected
            return AgentReply(kind="selection" if selected_now else "utterance",
                              text=reply)
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/selection", response_model=ResultPayload,
              dependencies=[Depends(check_token)])
    def post_selection(session_id: str, req: SelectionRequest) -> ResultPayload:
        session = registry.get(session_id)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="out of turn: a turn is in progress")
        try:
            if session.closed:
                raise HTTPException(status_code=409, detail="session is closed")
            human_ids = {d.id for d in session.ctx.partner_scene.dots}
            if req.dot_id not in human_ids:
                raise HTTPException(status_code=404, detail=f"unknown dot {req.dot_id}")
            session.human_selection = req.dot_id
            session.log.append(("human", SELECT_MARKER))
            if session.agent.selection is None:
                session.agent.force_select()
                session.log.append(("agent", SELECT_MARKER))
            session.result = _game_result(session)
            session.closed = True
            registry.persist(session)
            r = session.result
            return ResultPayload(success=r.success, agent_selection=r.agent_selection,
                                 partner_selection=r.partner_selection,
                                 turn_count=r.turn_count)
        finally:
            session.lock.release()

    @app.get("/sessions/{session_id}/transcript", response_model=TranscriptPayload,
             response_model_exclude_none=True, dependencies=[Depends(check_token)])
    def get_transcript(session_id: str) -> TranscriptPayload:
        session = registry.get(session_id)
        turns = []
        for record, turn in _merged_turns(session):
            payload = TurnPayload(index=record["index"], speaker=record["speaker"],
                                  text=record["text"])
            if session.closed and turn is not None:
                # id-bearing internals only after close: they would leak overlap
                payload.program = record["program"]
                payload.plan = record["plan"]
                payload.eig_trace = record["eig_trace"]
                payload.fallback = record["fallback"]
            turns.append(payload)
        result = None
        shared = None
        if session.closed and session.result is not None:
            r = session.result
            result = ResultPayload(success=r.success, agent_selection=r.agent_selection,
                                   partner_selection=r.partner_selection,
                                   turn_count=r.turn_count)
            shared = sorted(session.ctx.shared)
        return TranscriptPayload(session_id=session_id, closed=session.closed,
                                 turns=turns, shared=shared, result=result)

    return app


app = create_app()
