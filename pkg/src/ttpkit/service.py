"""HTTP service: question answering with citations, package lookup, graph.

The service is a thin, stateless layer over the vector index, the chat
prompt and the transition graph; each /ask is independent and never
mutates the store.
"""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .errors import TtpkitError
from .graph import TransitionGraph, build_graph, to_dot
from .llm import ChatMessage
from .prompts import render_chat_prompt
from .store import VectorIndex
from .vectors import TtpSequence

DEFAULT_TOP_K = 4


@dataclass
class ServiceState:
    index: VectorIndex | None = None
    provider: object | None = None
    corpus: list[TtpSequence] | None = None
    is_mock: bool = True
    cors_origin: str | None = None
    ask_timeout: float = 30.0
    auth_token: str | None = None  # absent means open, for desk use
    _graph: TransitionGraph | None = field(default=None, repr=False)

    def graph(self) -> TransitionGraph:
        if self._graph is None:
            self._graph = build_graph(self.corpus)
        return self._graph


class AskRequest(BaseModel):
    question: str = ""
    top_k: int | None = None


class Citation(BaseModel):
    package_name: str
    version: str
    score: float


class AskResponse(BaseModel):
    answer: str
    citations: list[Citation]
    model_name: str
    elapsed_ms: int


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="ttpkit qa-service")

    if state.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[state.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    if state.auth_token:

        @app.middleware("http")
        async def bearer_auth(request, call_next):
            if request.url.path != "/healthz":
                supplied = request.headers.get("Authorization", "")
                if supplied != f"Bearer {state.auth_token}":
                    from fastapi.responses import JSONResponse

                    return JSONResponse({"detail": "unauthorized"}, status_code=401)
            return await call_next(request)

    def _ask_sync(question: str, top_k: int) -> AskResponse:
        started = time.perf_counter()
        hits = state.index.search(question, k=top_k)
        prompt = render_chat_prompt(question, [doc for doc, _ in hits])
        try:
            answer = state.provider.complete([ChatMessage("user", prompt)])
        except TtpkitError as exc:
            raise HTTPException(status_code=502, detail=exc.kind)
        elapsed_ms = int((time.perf_counter() - started) * 1000)
        return AskResponse(
            answer=answer,
            citations=[
                Citation(package_name=doc.package_name, version=doc.version, score=score)
                for doc, score in hits
            ],
            model_name=getattr(state.provider, "model_name", "unknown"),
            elapsed_ms=elapsed_ms,
        )

    @app.post("/ask", response_model=AskResponse)
    async def ask(request: AskRequest):
        question = request.question.strip()
        if not question:
            raise HTTPException(status_code=400, detail="question must be non-empty")
        top_k = request.top_k if request.top_k is not None else DEFAULT_TOP_K
        if top_k < 1:
            raise HTTPException(status_code=400, detail="top_k must be positive")
        if state.index is None or len(state.index) == 0:
            raise HTTPException(status_code=503, detail="index unavailable")
        try:
            return await asyncio.wait_for(
                run_in_threadpool(_ask_sync, question, top_k),
                timeout=state.ask_timeout,
            )
        except asyncio.TimeoutError:
            raise HTTPException(status_code=504, detail="answer timed out")

    @app.get("/packages/{name}")
    def packages(name: str):
        if state.index is None:
            raise HTTPException(status_code=503, detail="index unavailable")
        hits = state.index.find_by_name(name)
        if not hits:
            raise HTTPException(status_code=404, detail=f"{name} is not indexed")
        return [doc.to_json() for doc in hits]

    @app.get("/graph")
    def graph(format: str = "json"):
        if not state.corpus:
            raise HTTPException(status_code=503, detail="no TTP corpus loaded")
        built = state.graph()
        if format == "dot":
            return PlainTextResponse(to_dot(built))
        return built.to_json()

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "index_size": len(state.index) if state.index is not None else 0,
            "provider": "mock" if state.is_mock else "configured",
        }

    return app
