"""Line-delimited scoring service.

One JSON request per line, one JSON response per line, in request order.
External training stacks point their reward lookup at this process over
stdio or a local TCP port; a batch of G completions for one prompt is one
natural unit of work.
"""

from __future__ import annotations

import json
import os
import queue
import socketserver
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import IO, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .engine import Limits
from .extraction import CompletionRecord, classify_completion
from .scoring import GroundTruth, RewardConfig, compute_reward, match_answer
from .values import value_to_text

PROTOCOL_VERSION = __version__


class LimitsOverride(BaseModel):
    model_config = ConfigDict(extra="forbid")
    max_steps: Optional[int] = Field(default=None, gt=0)
    max_depth: Optional[int] = Field(default=None, gt=0)
    max_list_len: Optional[int] = Field(default=None, gt=0)
    wall_clock_budget_ms: Optional[int] = Field(default=None, gt=0)

    def apply(self, base: Limits) -> Limits:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return replace(base, **overrides) if overrides else base


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str = Field(min_length=1)
    completion: str
    answer_type: str
    answer: str
    rel_tol: Optional[float] = Field(default=None, gt=0)
    limits: Optional[LimitsOverride] = None


class ScoreResponse(BaseModel):
    id: str
    classification: str  # no_code | syntax_error | runtime_error | executed
    answer_value: Optional[str] = None
    correct: bool = False
    reward: float = 0.0
    error_message: Optional[str] = None
    eval_steps_used: int = 0
    wall_ms: int = 0


def score_request(request: ScoreRequest,
                  reward_config: Optional[RewardConfig] = None,
                  default_limits: Optional[Limits] = None) -> ScoreResponse:
    reward_config = reward_config if reward_config is not None else RewardConfig()
    base_limits = default_limits if default_limits is not None else Limits()
    limits = request.limits.apply(base_limits) if request.limits is not None else base_limits

    started = time.monotonic()
    truth = GroundTruth.parse(request.answer_type, request.answer, request.rel_tol)
    record = CompletionRecord(id=request.id, prompt_id=request.id,
                              completion_text=request.completion)
    outcome = classify_completion(record, limits)
    correct = outcome.error_free and outcome.answer is not None and match_answer(outcome.answer, truth)
    wall_ms = int((time.monotonic() - started) * 1000)
    return ScoreResponse(
        id=request.id,
        classification=outcome.kind,
        answer_value=value_to_text(outcome.answer) if outcome.answer is not None else None,
        correct=correct,
        reward=compute_reward(outcome, truth, reward_config),
        error_message=outcome.message,
        eval_steps_used=outcome.eval_steps_used,
        wall_ms=wall_ms,
    )


def score_batch(requests: Sequence[ScoreRequest],
                reward_config: Optional[RewardConfig] = None,
                default_limits: Optional[Limits] = None) -> list[ScoreResponse]:
    """Score requests in order; each failure is encoded in its own
    response, never raised."""
    return [score_request(r, reward_config, default_limits) for r in requests]


def handle_line(line: str,
                reward_config: Optional[RewardConfig] = None,
                default_limits: Optional[Limits] = None) -> str:
    """One request line to one response line; malformed input yields an
    in-band error response with id \"?\"."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        return json.dumps({"id": "?", "error": f"malformed JSON: {err.msg}"})
    if isinstance(obj, dict) and obj.get("op") == "ping":
        return json.dumps({"op": "pong", "version": PROTOCOL_VERSION})
    try:
        request = ScoreRequest.model_validate(obj)
    except ValidationError as err:
        return json.dumps({"id": "?", "error": f"invalid request: {err.errors()[0]['msg']}"})
    try:
        response = score_request(request, reward_config, default_limits)
    except ValueError as err:
        return json.dumps({"id": request.id, "error": str(err)})
    return response.model_dump_json()


def serve_stream(reader: IO[str], writer: IO[str],
                 reward_config: Optional[RewardConfig] = None,
                 default_limits: Optional[Limits] = None,
                 workers: Optional[int] = None) -> None:
    """Process request lines until end of input. Requests run concurrently
    up to the worker count; a dedicated writer drains results strictly in
    request order and flushes each response as soon as it is ready, so a
    lone request is answered without waiting for more input."""
    n_workers = workers if workers is not None else (os.cpu_count() or 1)
    done = object()
    # Bounded for backpressure: readers stall once window results are in flight.
    results: queue.Queue = queue.Queue(maxsize=n_workers * 4)

    def write_loop() -> None:
        while True:
            item = results.get()
            if item is done:
                return
            writer.write(item.result() + "\n")
            writer.flush()

    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        writer_thread = threading.Thread(target=write_loop, daemon=True)
        writer_thread.start()
        try:
            for line in reader:
                if not line.strip():
                    continue
                results.put(pool.submit(handle_line, line, reward_config, default_limits))
        finally:
            results.put(done)
            writer_thread.join()


def serve_stdio(reward_config=None, default_limits=None, workers=None) -> None:
    serve_stream(sys.stdin, sys.stdout, reward_config, default_limits, workers)


def serve_tcp(port: int, reward_config=None, default_limits=None, workers=None, host: str = "127.0.0.1"):
    """Serve the line protocol on a local TCP port; one lock-step stream
    per connection. Returns the server object (call serve_forever)."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            reader = (raw.decode("utf-8") for raw in self.rfile)

            class _W:
                def write(_, text: str):
                    self.wfile.write(text.encode("utf-8"))

                def flush(_):
                    self.wfile.flush()

            serve_stream(reader, _W(), reward_config, default_limits, workers)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)
