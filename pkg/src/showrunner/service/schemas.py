"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class RunCreateRequest(BaseModel):
    story_text: str
    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    interactive: bool = False


class RunCreated(BaseModel):
    run_id: str
    existing: bool = False


class NodeView(BaseModel):
    id: str
    kind: str
    agent: str
    status: str
    revision_count: int
    degraded: bool = False


class GraphSnapshot(BaseModel):
    run_id: str
    status: str
    nodes: list[NodeView]
    edges: list[list[str]]


class AssetRecordView(BaseModel):
    table: str
    key_fields: dict[str, Any]
    version: int
    producer: str
    branch: str


class ReviewItemView(BaseModel):
    task_id: str
    asset: Optional[dict[str, Any]] = None
    report: Optional[dict[str, Any]] = None
    options: list[str]


class DecisionRequest(BaseModel):
    action: Literal["approve", "reject", "override_tool"]
    note: Optional[str] = None
    tool: Optional[str] = None


class DecisionAck(BaseModel):
    run_id: str
    task_id: str
    action: str
    seq: int


class RunSummary(BaseModel):
    run_id: str
    status: str
    interactive: bool
