"""HTTP surface over live runs: graph snapshots, asset tables, review queues,
decision posting, and a server-sent event stream of the transcript.

Every response is a projection of a run's event-sourced state; the service
holds no state of its own beyond the run registry.
"""

from __future__ import annotations

import json
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from ..director import ReviewConflict, StartupError
from ..model import TableName, canonical_json
from ..planning import PlanningError
from .manager import RunHandle, RunManager
from .schemas import (
    DecisionAck,
    DecisionRequest,
    GraphSnapshot,
    ReviewItemView,
    RunCreated,
    RunCreateRequest,
    RunSummary,
)

_STREAM_POLL_SECONDS = 0.1


def create_app(manager: RunManager | None = None) -> FastAPI:
    app = FastAPI(title="showrunner", version="0.1.0")
    app.state.manager = manager or RunManager()
    # The review console may be served from any origin; the service carries
    # no credentials (multi-user auth is out of scope).
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _handle(run_id: str) -> RunHandle:
        handle = app.state.manager.get(run_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown run '{run_id}'")
        return handle

    @app.post("/runs", response_model=RunCreated)
    def create_run(request: RunCreateRequest) -> RunCreated:
        try:
            handle, existing = app.state.manager.create_run(
                request.story_text,
                request.config,
                seed=request.seed,
                interactive=request.interactive,
            )
        except (StartupError, PlanningError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RunCreated(run_id=handle.run_id, existing=existing)

    @app.get("/runs", response_model=list[RunSummary])
    def list_runs() -> list[RunSummary]:
        return [
            RunSummary(
                run_id=h.run_id,
                status=h.director.run_status,
                interactive=h.director.config.interactive,
            )
            for h in app.state.manager.all_runs()
        ]

    @app.get("/runs/{run_id}/graph", response_model=GraphSnapshot)
    def get_graph(run_id: str) -> GraphSnapshot:
        return GraphSnapshot(**_handle(run_id).director.graph_snapshot())

    @app.get("/runs/{run_id}/assets")
    def get_assets(run_id: str, table: Optional[str] = None) -> list[dict]:
        director = _handle(run_id).director
        records = director.store.all_records()
        if table is not None:
            try:
                wanted = TableName(table)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown table '{table}'") from None
            records = [r for r in records if r.table == wanted]
        return [r.to_dict() for r in records]

    @app.get("/runs/{run_id}/reviews", response_model=list[ReviewItemView])
    def get_reviews(run_id: str) -> list[ReviewItemView]:
        return [ReviewItemView(**item) for item in _handle(run_id).director.review_items()]

    @app.get("/runs/{run_id}/manifest")
    def get_manifest(run_id: str) -> Response:
        director = _handle(run_id).director
        if director.manifest is None:
            raise HTTPException(status_code=404, detail="manifest not available yet")
        return Response(
            content=canonical_json(director.manifest.to_dict()),
            media_type="application/json",
        )

    @app.post("/runs/{run_id}/tasks/{task_id}/decision", response_model=DecisionAck)
    def post_decision(run_id: str, task_id: str, decision: DecisionRequest) -> DecisionAck:
        director = _handle(run_id).director
        try:
            result = director.apply_decision(
                task_id, decision.action, note=decision.note, tool=decision.tool
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task '{task_id}'") from None
        except ReviewConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return DecisionAck(run_id=run_id, task_id=task_id, action=result["action"], seq=result["seq"])

    @app.get("/runs/{run_id}/events")
    def stream_events(run_id: str, after: int = 0) -> StreamingResponse:
        handle = _handle(run_id)

        def _generate() -> Iterator[str]:
            last = after
            while True:
                events, finished = handle.director.wait_for_events(
                    last, timeout=_STREAM_POLL_SECONDS
                )
                for event in events:
                    last = event.seq
                    yield f"id: {event.seq}\ndata: {json.dumps(event.to_dict(), sort_keys=True)}\n\n"
                if finished and not events:
                    remaining, _ = handle.director.events_since(last)
                    for event in remaining:
                        last = event.seq
                        yield f"id: {event.seq}\ndata: {json.dumps(event.to_dict(), sort_keys=True)}\n\n"
                    return

        return StreamingResponse(_generate(), media_type="text/event-stream")

    return app


app = create_app()
