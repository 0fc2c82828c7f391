"""HTTP face of the scoring service.

Wraps the same score_batch entry point as the line protocol, for clients
that prefer REST over stdio/TCP lines.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI
from pydantic import BaseModel

from . import __version__
from .engine import Limits
from .scoring import RewardConfig
from .service import ScoreRequest, ScoreResponse, score_batch, score_request


class PongResponse(BaseModel):
    op: str = "pong"
    version: str = __version__


class BatchRequest(BaseModel):
    requests: list[ScoreRequest]


class BatchResponse(BaseModel):
    responses: list[ScoreResponse]


def create_app(reward_config: Optional[RewardConfig] = None,
               default_limits: Optional[Limits] = None) -> FastAPI:
    app = FastAPI(title="neurosym scoring service", version=__version__)

    @app.get("/ping", response_model=PongResponse)
    def ping() -> PongResponse:
        return PongResponse()

    @app.post("/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        return score_request(request, reward_config, default_limits)

    @app.post("/score/batch", response_model=BatchResponse)
    def batch(request: BatchRequest) -> BatchResponse:
        return BatchResponse(responses=score_batch(request.requests, reward_config, default_limits))

    return app


app = create_app()
