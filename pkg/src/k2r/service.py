"""HTTP service exposing the pipeline to interactive clients.

Sessions are in-memory what-if workbenches: create one with an episode and a
pipeline config, ask for the knowledge prediction, then probe responses with
optional knowledge injection and per-probe confidence. Every probe's trace is
appended to the session history. Killing the service loses only sessions;
reports and datasets are never touched.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backends import BackendDescriptor
from .pipeline import (
    DialogueEpisode,
    K2RConfig,
    PipelineStepError,
    PipelineTrace,
    config_with_confidence,
    predict_knowledge,
    respond,
)

_CONFIG_FIELDS = {
    "knowledge_backend",
    "response_backend",
    "shared",
    "knowledge_open_token",
    "knowledge_close_token",
    "confidence",
    "response_beam_size",
    "filter_beams",
    "filtered_beam_size",
}


def config_from_dict(data: Mapping) -> K2RConfig:
    """Build a pipeline config from its wire-format dict (descriptor backends)."""
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ValueError(f"unknown config field: {sorted(unknown)[0]}")
    if "knowledge_backend" not in data:
        raise ValueError("missing config field: knowledge_backend")

    def descriptor(value: Mapping) -> BackendDescriptor:
        if not isinstance(value, Mapping) or "kind" not in value:
            raise ValueError("backend descriptors need a 'kind' field")
        return BackendDescriptor(value["kind"], dict(value.get("parameters", {})))

    kwargs: dict = {"knowledge_backend": descriptor(data["knowledge_backend"])}
    if data.get("response_backend") is not None:
        kwargs["response_backend"] = descriptor(data["response_backend"])
    for name in _CONFIG_FIELDS - {"knowledge_backend", "response_backend"}:
        if name in data:
            kwargs[name] = data[name]
    return K2RConfig(**kwargs)


@dataclass
class Session:
    """One interactive session: episode, config snapshot, append-only probe history."""

    session_id: str
    episode: DialogueEpisode
    config: K2RConfig
    config_echo: dict
    seed: int
    history: list[PipelineTrace] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "episode": self.episode.to_dict(),
            "config": self.config_echo,
            "seed": self.seed,
            "history": [trace.to_dict() for trace in self.history],
        }


class CreateSessionBody(BaseModel):
    episode: dict
    config: dict
    seed: int = 0


class RespondBody(BaseModel):
    injected_knowledge: str | None = None
    confidence: int | None = None


def create_app(session_log: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="k2r pipeline service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    log_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def invalid_body(_: Request, exc: RequestValidationError) -> JSONResponse:
        fields = ".".join(str(part) for part in exc.errors()[0]["loc"]) if exc.errors() else "body"
        return JSONResponse(status_code=400, content={"detail": f"invalid field: {fields}"})

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return session

    def append_log(session: Session, trace: PipelineTrace) -> None:
        if session_log is None:
            return
        line = json.dumps(
            {"session_id": session.session_id, "trace": trace.to_dict()}, ensure_ascii=False
        )
        with log_lock, open(session_log, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        try:
            episode = DialogueEpisode.from_dict(body.episode)
            config = config_from_dict(body.config)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session = Session(
            session_id=uuid.uuid4().hex,
            episode=episode,
            config=config,
            config_echo=body.config,
            seed=body.seed,
        )
        with sessions_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id}

    @app.post("/api/sessions/{session_id}/knowledge")
    def session_knowledge(session_id: str) -> dict:
        session = get_session(session_id)
        try:
            knowledge, beams = predict_knowledge(session.config, session.episode, session.seed)
        except PipelineStepError as exc:
            raise HTTPException(
                status_code=502, detail={"step": exc.step, "error": str(exc.cause)}
            ) from exc
        return {
            "predicted_knowledge": knowledge,
            "beams": [{"text": b.text, "score": b.score} for b in beams],
        }

    @app.post("/api/sessions/{session_id}/respond")
    def session_respond(session_id: str, body: RespondBody) -> dict:
        session = get_session(session_id)
        config = session.config
        if body.confidence is not None:
            try:
                config = config_with_confidence(config, body.confidence)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=f"invalid field: confidence ({exc})") from exc
        try:
            trace = respond(config, session.episode, session.seed, body.injected_knowledge)
        except PipelineStepError as exc:
            raise HTTPException(
                status_code=502, detail={"step": exc.step, "error": str(exc.cause)}
            ) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"invalid field: injected_knowledge ({exc})") from exc
        with session.lock:
            session.history.append(trace)
        append_log(session, trace)
        return trace.to_dict()

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str) -> dict:
        return get_session(session_id).to_dict()

    return app
