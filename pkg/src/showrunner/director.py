"""The director engine: segmentation, planning, dependency-ordered execution,
evaluation routing, localized revision, and an append-only event log.

State changes flow through one lock-guarded owner (this class); replaying the
event log reconstructs every task status exactly. Timestamps are logical
sequence numbers so identical (story, config, seed) runs produce
byte-identical transcripts.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

from .agents import (
    Agent,
    AgentContext,
    AgentError,
    AssetVault,
    MockAsset,
    build_agents,
)
from .config import RunConfig
from .memory import AssetStore, AssetMemoryError
from .model import (
    AssetRecord,
    EvaluationReport,
    FinalManifest,
    Story,
    StyleVector,
    TableName,
    Task,
    TaskKind,
    TaskStatus,
    Verdict,
    WorkflowGraph,
    canonical_json,
    digest,
    transition_allowed,
    validate_graph,
    validate_story,
)
from .planning import plan_tasks, slugify
from .protocol import (
    ProvenanceEntry,
    encode,
    request_envelope,
    track_provenance,
)
from .registry import NoTools, ToolInvoker, ToolRegistry, default_registry, load_registry_file
from .scheduling import topological_schedule
from .segmentation import derive_styles, segment_story


class StartupError(Exception):
    pass


class ContractViolation(Exception):
    pass


class ReviewConflict(Exception):
    """Decision posted against a task that is not awaiting review."""


class RunFailure(Exception):
    def __init__(self, report: Mapping[str, Any]) -> None:
        super().__init__(canonical_json(dict(report)))
        self.report = dict(report)


# Event kinds appearing in the transcript.
RUN_STARTED = "run_started"
TASKS_PLANNED = "tasks_planned"
TASK_STATUS_CHANGED = "task_status_changed"
ENVELOPE_SENT = "envelope_sent"
ENVELOPE_RECEIVED = "envelope_received"
ASSET_STORED = "asset_stored"
ASSET_DEGRADED = "asset_degraded"
EVALUATION_COMPLETED = "evaluation_completed"
REVIEW_REQUESTED = "review_requested"
DECISION_APPLIED = "decision_applied"
RUN_COMPLETED = "run_completed"
RUN_FAILED = "run_failed"


@dataclass(frozen=True)
class RunEvent:
    """One transcript line; ``seq`` is the logical timestamp."""

    seq: int
    kind: str
    payload: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "kind": self.kind, "payload": dict(self.payload)}


def handle_evaluation(task: Task, report: EvaluationReport, config: RunConfig) -> str:
    """Route one evaluation verdict: accept, revise, degrade_and_continue,
    or fail (budget exhausted without degradation, or an escalation)."""
    if report.task_id != task.id:
        raise ContractViolation(
            f"report for '{report.task_id}' routed to task '{task.id}'"
        )
    if report.verdict == Verdict.ACCEPT:
        return "accept"
    if report.verdict == Verdict.REVISE and task.revision_count < config.max_revisions:
        return "revise"
    if report.verdict == Verdict.REVISE and config.continue_on_degraded:
        return "degrade_and_continue"
    return "fail"


def localized_revision(
    graph: WorkflowGraph,
    failed: str,
    consumed: Mapping[str, Iterable[str]],
    produced: Mapping[str, Iterable[str]],
) -> set[str]:
    """The failed task plus every descendant that consumed an asset produced
    by a task already marked for re-run. Never includes ancestors."""
    if failed not in graph.nodes:
        raise LookupError(f"task '{failed}' is not in the workflow graph")

    descendants: set[str] = set()
    frontier = [failed]
    while frontier:
        node = frontier.pop()
        for succ in graph.successors(node):
            if succ not in descendants:
                descendants.add(succ)
                frontier.append(succ)

    result = {failed}
    rerun_outputs = set(produced.get(failed, ()))
    for batch in topological_schedule(graph):
        for node in batch:
            if node in result or node not in descendants:
                continue
            if set(consumed.get(node, ())) & rerun_outputs:
                result.add(node)
                rerun_outputs |= set(produced.get(node, ()))
    return result


def replay_task_statuses(events: Iterable[RunEvent]) -> dict[str, tuple[str, int]]:
    """Fold the event log back into final (status, revision_count) per task."""
    statuses: dict[str, tuple[str, int]] = {}
    for event in events:
        if event.kind == TASKS_PLANNED:
            for task in event.payload["tasks"]:
                statuses[task["id"]] = (task["status"], task["revision_count"])
        elif event.kind == TASK_STATUS_CHANGED:
            statuses[event.payload["task_id"]] = (
                event.payload["to"],
                event.payload["revision_count"],
            )
    return statuses


class _RecordingStore:
    """Forwards to the asset store while logging read/write keys per task."""

    def __init__(self, store: AssetStore, reads: set[str], writes: set[str]) -> None:
        self._store = store
        self._reads = reads
        self._writes = writes

    def get(self, table: TableName, record_id: str, branch: str = "main", version: int | None = None):
        record = self._store.get(table, record_id, branch, version)
        self._reads.add(f"{table.value}:{record_id}")
        return record

    def put(self, record: AssetRecord, producer: str) -> int:
        version = self._store.put(record, producer)
        self._writes.add(f"{record.table.value}:{record.record_id}")
        return version

    def query_similar(self, table: TableName, query_text: str, k: int):
        records = self._store.query_similar(table, query_text, k)
        for record in records:
            self._reads.add(f"{record.table.value}:{record.record_id}")
        return records


class _RecordingVault:
    def __init__(self, vault: AssetVault, reads: set[str], writes: set[str]) -> None:
        self._vault = vault
        self._reads = reads
        self._writes = writes

    def get(self, asset_id: str) -> MockAsset | None:
        asset = self._vault.get(asset_id)
        if asset is not None:
            self._reads.add(f"asset:{asset_id}")
        return asset

    def require(self, asset_id: str, what: str) -> MockAsset:
        asset = self._vault.require(asset_id, what)
        self._reads.add(f"asset:{asset_id}")
        return asset

    def put(self, asset: MockAsset) -> MockAsset:
        self._vault.put(asset)
        self._writes.add(f"asset:{asset.asset_id}")
        return asset


class Director:
    """Owns one run end to end; all mutations serialize through one lock."""

    def __init__(
        self,
        config: RunConfig,
        registry: ToolRegistry | None = None,
        agents: Mapping[str, Agent] | None = None,
        store: AssetStore | None = None,
    ) -> None:
        self.config = config
        if registry is not None:
            self.registry = registry
        elif config.tool_registry_path:
            self.registry = load_registry_file(config.tool_registry_path)
        else:
            self.registry = default_registry()
        self.invoker = ToolInvoker(self.registry)
        self.agents = dict(agents or build_agents())
        self.store = store if store is not None else AssetStore(embedding_dim=config.embedding_dim)
        self.vault = AssetVault()

        self.run_id = ""
        self.story: Story | None = None
        self.styles: StyleVector | None = None
        self.graph: WorkflowGraph = WorkflowGraph(frozenset(), frozenset())
        self.tasks: dict[str, Task] = {}
        self.events: list[RunEvent] = []
        self.manifest: FinalManifest | None = None
        self.run_status = "created"
        self.failure_report: dict[str, Any] | None = None

        self.consumed: dict[str, set[str]] = {}
        self.produced: dict[str, set[str]] = {}
        self.task_outputs: dict[str, dict[str, Any]] = {}
        self.dispatched_payloads: dict[str, dict[str, Any]] = {}
        self.executions: dict[str, int] = {}
        self.degraded: set[str] = set()
        self.last_reports: dict[str, dict[str, Any]] = {}
        self.provenance: tuple[ProvenanceEntry, ...] = ()
        self._pinned: dict[str, dict[str, Any]] = {}
        self._rig_remaining: dict[str, int | None] = {}

        self._cond = threading.Condition()
        self.store.set_write_hook(self._on_asset_written)

    # -- lifecycle --------------------------------------------------------

    def prepare(self, story: Story | None = None, story_text: str | None = None) -> None:
        """Segment (if needed), validate, derive styles, plan, and seed memory."""
        with self._cond:
            if story is None:
                if story_text is None:
                    raise StartupError("either a story or raw script text is required")
                story = segment_story(story_text, self.config.character_lexicon)
            violations = validate_story(story)
            if violations:
                raise StartupError(f"story failed validation: {violations}")
            self.story = story
            self.styles = derive_styles(
                story, self.config.style_rules, self.config.style_defaults
            )
            self.run_id = "run_" + digest([story.to_dict(), self.config.to_dict()])[:12]
            self._emit(
                RUN_STARTED,
                {"run_id": self.run_id, "story_id": story.id, "seed": self.config.seed},
            )

            tasks, graph = plan_tasks(story, self.styles, dict(self.config.character_lexicon))
            graph_violations = validate_graph(graph)
            if graph_violations:
                raise StartupError(f"planned graph invalid: {graph_violations}")
            missing_agents = sorted(
                {t.agent for t in tasks if t.agent not in self.agents}
            )
            if missing_agents:
                raise StartupError(f"configuration references unregistered agents: {missing_agents}")
            self.tasks = {t.id: t for t in tasks}
            self.graph = graph

            self.store.put(
                AssetRecord(
                    table=TableName.STYLE,
                    key_fields={
                        "id": story.id,
                        "visual_style": list(self.styles.visual_style),
                        "acoustic_style": list(self.styles.acoustic_style),
                    },
                    version=1,
                    producer="Director",
                ),
                producer="Director",
            )
            for shot in story.all_shots():
                self.store.put(
                    AssetRecord(
                        table=TableName.SHOT,
                        key_fields={"id": shot.id, "description": shot.description},
                        version=1,
                        producer="Director",
                    ),
                    producer="Director",
                )

            self._emit(
                TASKS_PLANNED,
                {
                    "tasks": [t.to_dict() for t in tasks],
                    "edges": sorted([a, b] for a, b in graph.edges),
                    "styles": self.styles.to_dict(),
                },
            )

    def execute(self) -> FinalManifest:
        """Run every batch to completion; returns the final manifest."""
        if self.story is None:
            raise StartupError("prepare() must run before execute()")
        with self._cond:
            self.run_status = "running"
        try:
            while True:
                with self._cond:
                    ready = self._ready_tasks()
                    if not ready:
                        statuses = {t.status for t in self.tasks.values()}
                        if statuses == {TaskStatus.SUCCEEDED}:
                            break
                        if TaskStatus.AWAITING_REVIEW in statuses:
                            self._cond.wait(timeout=0.25)
                            continue
                        raise RunFailure(
                            {
                                "reason": "scheduler stalled with no runnable tasks",
                                "statuses": {
                                    t.id: t.status.value
                                    for t in self.tasks.values()
                                    if t.status != TaskStatus.SUCCEEDED
                                },
                            }
                        )
                    evaluations = []
                    for task_id in ready:
                        self._execute_task(task_id)
                        if self.tasks[task_id].kind == TaskKind.EVALUATE:
                            evaluations.append(task_id)
                    for task_id in sorted(evaluations):
                        self._process_verdict(task_id)
        except RunFailure as failure:
            with self._cond:
                self.failure_report = failure.report
                self.run_status = "failed"
                self._emit(RUN_FAILED, {"report": failure.report})
                self._cond.notify_all()
            raise

        with self._cond:
            assert self.manifest is not None
            self.run_status = "completed"
            self._emit(
                RUN_COMPLETED,
                {"manifest_digest": digest(self.manifest.to_dict())},
            )
            self._cond.notify_all()
        return self.manifest

    # -- scheduling -------------------------------------------------------

    def _ready_tasks(self) -> list[str]:
        # A task blocked on review freezes its whole downstream cone; work
        # elsewhere in the graph keeps flowing.
        blocked: set[str] = set()
        frontier = [
            t.id for t in self.tasks.values() if t.status == TaskStatus.AWAITING_REVIEW
        ]
        while frontier:
            node = frontier.pop()
            for succ in self.graph.successors(node):
                if succ not in blocked:
                    blocked.add(succ)
                    frontier.append(succ)

        ready = []
        for task_id in sorted(self.tasks):
            task = self.tasks[task_id]
            if task.status != TaskStatus.PENDING or task_id in blocked:
                continue
            preds = self.graph.predecessors(task_id)
            if all(self.tasks[p].status == TaskStatus.SUCCEEDED for p in preds):
                ready.append(task_id)
        return ready

    # -- task execution ---------------------------------------------------

    def _execute_task(self, task_id: str) -> None:
        task = self.tasks[task_id]
        attempt = task.revision_count + 1
        payload = dict(task.payload)
        pins = self._pinned.pop(task_id, {})
        payload.update({k: v for k, v in pins.items() if v is not None})

        if task.kind == TaskKind.EVALUATE:
            target_id = payload["target_task_id"]
            payload["target_payload"] = self.dispatched_payloads.get(
                target_id, dict(self.tasks[target_id].payload)
            )
            payload["asset_id"] = self.task_outputs[target_id]["asset_id"]
            payload["thresholds"] = {
                "similarity_threshold": self.config.similarity_threshold
            }
        elif task.kind == TaskKind.EDIT:
            payload["run_id"] = self.run_id
            payload["styles"] = self.styles.to_dict() if self.styles else {}

        assert self.styles is not None
        requirement = "style: should be " + " ".join(self.styles.visual_style)
        identity_refs = [
            f"char_{_slug}_front"
            for _slug in sorted(
                _character_slugs(payload.get("characters", ()))
            )
        ]
        request = request_envelope(
            envelope_id=f"{task_id}_v{attempt}",
            message_type=task.kind.value,
            prompt=str(payload.get("prompt", "")),
            requirement=requirement,
            producer=task.agent,
            version=attempt,
            assets={"style": [f"style_{self.story.id}"], "identity": identity_refs},
            payload=payload,
        )
        self.provenance = track_provenance(request, self.provenance)
        self._emit(ENVELOPE_SENT, {"task_id": task_id, "message": encode(request)})
        self._set_status(task_id, TaskStatus.RUNNING)

        reads: set[str] = set()
        writes: set[str] = set()
        ctx = AgentContext(
            store=_RecordingStore(self.store, reads, writes),  # type: ignore[arg-type]
            vault=_RecordingVault(self.vault, reads, writes),  # type: ignore[arg-type]
            registry=self.registry,
            invoker=self.invoker,
            config=self.config,
            seed=self.config.seed,
        )
        try:
            response = self.agents[task.agent].execute(request, ctx)
        except (AgentError, NoTools, AssetMemoryError) as exc:
            self._set_status(task_id, TaskStatus.FAILED, reason=str(exc))
            raise RunFailure(
                {"task_id": task_id, "reason": str(exc), "kind": task.kind.value}
            ) from exc

        self.provenance = track_provenance(response, self.provenance)
        self._emit(ENVELOPE_RECEIVED, {"task_id": task_id, "message": encode(response)})
        self.consumed[task_id] = reads
        self.produced[task_id] = writes
        self.task_outputs[task_id] = dict(response.outputs or {})
        self.dispatched_payloads[task_id] = payload
        self.executions[task_id] = self.executions.get(task_id, 0) + 1
        if task.kind == TaskKind.EDIT:
            self.manifest = FinalManifest.from_dict(self.task_outputs[task_id]["manifest"])
        self._set_status(task_id, TaskStatus.SUCCEEDED)

    # -- evaluation routing -------------------------------------------------

    def _process_verdict(self, evaluate_task_id: str) -> None:
        outputs = self.task_outputs[evaluate_task_id]
        report = EvaluationReport.from_dict(outputs["report"])
        target_id = report.task_id
        target = self.tasks[target_id]

        rigged = self._apply_rig(target_id)
        if rigged:
            report = replace(report, verdict=Verdict.REVISE)
        self.last_reports[target_id] = report.to_dict()
        self._emit(
            EVALUATION_COMPLETED,
            {
                "task_id": evaluate_task_id,
                "target_task_id": target_id,
                "report": report.to_dict(),
                "rigged": rigged,
            },
        )

        pause = self.config.interactive and (
            report.verdict != Verdict.ACCEPT
            or target.kind.value in self.config.review_checkpoints
        )
        if pause:
            self._set_status(target_id, TaskStatus.AWAITING_REVIEW)
            asset_id = self.task_outputs[target_id].get("asset_id")
            asset = self.vault.get(asset_id) if asset_id else None
            self._emit(
                REVIEW_REQUESTED,
                {
                    "task_id": target_id,
                    "report": report.to_dict(),
                    "asset_id": asset_id,
                    "asset_digest": asset.content_digest if asset else None,
                },
            )
            self._cond.notify_all()
            return

        decision = handle_evaluation(target, report, self.config)
        if decision == "accept":
            return
        if decision == "revise":
            self._request_revision(
                target_id,
                reason="evaluation",
                tool_override=report.recommended_tool,
            )
            return
        if decision == "degrade_and_continue":
            self.degraded.add(target_id)
            self._emit(
                ASSET_DEGRADED,
                {
                    "task_id": target_id,
                    "asset_id": self.task_outputs[target_id].get("asset_id"),
                    "report": report.to_dict(),
                },
            )
            return
        raise RunFailure(
            {
                "task_id": target_id,
                "reason": "revision budget exhausted",
                "report": report.to_dict(),
            }
        )

    def _apply_rig(self, target_id: str) -> bool:
        if target_id not in self._rig_remaining:
            # Exact task id beats prefix patterns beats the "*" catch-all.
            rig = self.config.rig_evaluator
            spec = rig.get(target_id)
            if spec is None:
                for pattern in sorted(rig):
                    if (
                        pattern != "*"
                        and pattern.endswith("*")
                        and target_id.startswith(pattern[:-1])
                    ):
                        spec = rig[pattern]
                        break
            if spec is None:
                spec = rig.get("*")
            if spec is None:
                self._rig_remaining[target_id] = 0
            elif spec == "always":
                self._rig_remaining[target_id] = None
            else:
                self._rig_remaining[target_id] = int(spec)
        remaining = self._rig_remaining[target_id]
        if remaining is None:
            return True
        if remaining > 0:
            self._rig_remaining[target_id] = remaining - 1
            return True
        return False

    def _request_revision(
        self,
        target_id: str,
        reason: str,
        note: str | None = None,
        tool_override: str | None = None,
    ) -> None:
        """Bump the target back to pending and reset its affected consumers."""
        target = self.tasks[target_id]
        pins = self._pinned.setdefault(target_id, {})
        if note:
            pins["revision_note"] = note
        if tool_override:
            pins["tool_override"] = tool_override

        self.tasks[target_id] = replace(target, revision_count=target.revision_count + 1)
        self._set_status(target_id, TaskStatus.NEEDS_REVISION, reason=reason)
        self._set_status(target_id, TaskStatus.PENDING, reason=reason)

        to_rerun = localized_revision(self.graph, target_id, self.consumed, self.produced)
        for task_id in sorted(to_rerun - {target_id}):
            task = self.tasks[task_id]
            if task.status in (TaskStatus.SUCCEEDED, TaskStatus.AWAITING_REVIEW):
                self._set_status(task_id, TaskStatus.NEEDS_REVISION, reason="upstream_revision")
                self._set_status(task_id, TaskStatus.PENDING, reason="upstream_revision")

    # -- review decisions ---------------------------------------------------

    def apply_decision(
        self,
        task_id: str,
        action: str,
        note: str | None = None,
        tool: str | None = None,
    ) -> dict[str, Any]:
        """Resolve an awaiting-review task: approve, reject, or override_tool."""
        with self._cond:
            if task_id not in self.tasks:
                raise KeyError(task_id)
            task = self.tasks[task_id]
            if task.status != TaskStatus.AWAITING_REVIEW:
                raise ReviewConflict(
                    f"task '{task_id}' is {task.status.value}, not awaiting review"
                )
            if action == "approve":
                self._set_status(task_id, TaskStatus.SUCCEEDED, reason="approved")
            elif action == "reject":
                if task.revision_count >= self.config.max_revisions:
                    raise ReviewConflict(
                        f"task '{task_id}' has exhausted its revision budget"
                    )
                self._request_revision(task_id, reason="rejected", note=note)
            elif action == "override_tool":
                if not tool:
                    raise ValueError("override_tool requires a tool name")
                if not self.registry.has_tool(task.agent, tool):
                    raise ValueError(
                        f"tool '{tool}' is not registered for agent '{task.agent}'"
                    )
                if task.revision_count >= self.config.max_revisions:
                    raise ReviewConflict(
                        f"task '{task_id}' has exhausted its revision budget"
                    )
                self._request_revision(task_id, reason="tool_override", tool_override=tool)
            else:
                raise ValueError(f"unknown decision action '{action}'")
            self._emit(
                DECISION_APPLIED,
                {"task_id": task_id, "action": action, "note": note, "tool": tool},
            )
            self._cond.notify_all()
            return {"task_id": task_id, "action": action, "seq": self.events[-1].seq}

    # -- projections --------------------------------------------------------

    def graph_snapshot(self) -> dict[str, Any]:
        with self._cond:
            return {
                "run_id": self.run_id,
                "status": self.run_status,
                "nodes": [
                    {
                        "id": t.id,
                        "kind": t.kind.value,
                        "agent": t.agent,
                        "status": t.status.value,
                        "revision_count": t.revision_count,
                        "degraded": t.id in self.degraded,
                    }
                    for t in (self.tasks[k] for k in sorted(self.tasks))
                ],
                "edges": sorted([a, b] for a, b in self.graph.edges),
            }

    def review_items(self) -> list[dict[str, Any]]:
        with self._cond:
            items = []
            for task_id in sorted(self.tasks):
                task = self.tasks[task_id]
                if task.status != TaskStatus.AWAITING_REVIEW:
                    continue
                asset_id = self.task_outputs.get(task_id, {}).get("asset_id")
                asset = self.vault.get(asset_id) if asset_id else None
                items.append(
                    {
                        "task_id": task_id,
                        "asset": asset.to_dict() if asset else None,
                        "report": self.last_reports.get(task_id),
                        "options": ["approve", "reject_with_note", "override_tool"],
                    }
                )
            return items

    def events_since(self, after_seq: int) -> tuple[list[RunEvent], bool]:
        with self._cond:
            newer = [e for e in self.events if e.seq > after_seq]
            return newer, self.run_status in ("completed", "failed")

    def wait_for_events(self, after_seq: int, timeout: float) -> tuple[list[RunEvent], bool]:
        with self._cond:
            newer = [e for e in self.events if e.seq > after_seq]
            if newer:
                return newer, self.run_status in ("completed", "failed")
            self._cond.wait(timeout=timeout)
            newer = [e for e in self.events if e.seq > after_seq]
            return newer, self.run_status in ("completed", "failed")

    def transcript_text(self) -> str:
        with self._cond:
            return "".join(canonical_json(e.to_dict()) + "\n" for e in self.events)

    def write_outputs(self, out_dir: str | Path) -> dict[str, str]:
        """Write manifest, transcript, asset descriptors, and table logs."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        if self.manifest is not None:
            manifest_path = out / "manifest.json"
            manifest_path.write_text(
                canonical_json(self.manifest.to_dict()) + "\n", encoding="utf-8"
            )
            paths["manifest"] = str(manifest_path)
        transcript_path = out / "transcript.jsonl"
        transcript_path.write_text(self.transcript_text(), encoding="utf-8")
        paths["transcript"] = str(transcript_path)

        # Protocol messages verbatim, one canonical envelope per line.
        with self._cond:
            messages = [
                e.payload["message"]
                for e in self.events
                if e.kind in (ENVELOPE_SENT, ENVELOPE_RECEIVED)
            ]
        messages_path = out / "messages.jsonl"
        messages_path.write_text(
            "".join(m + "\n" for m in messages), encoding="utf-8"
        )
        paths["messages"] = str(messages_path)

        assets_dir = out / "assets"
        assets_dir.mkdir(exist_ok=True)
        for asset in self.vault.all_assets():
            name = Path(asset.path).name
            (assets_dir / name).write_text(
                canonical_json(asset.to_dict()) + "\n", encoding="utf-8"
            )
        memory_dir = out / "memory"
        memory_dir.mkdir(exist_ok=True)
        by_table: dict[str, list[str]] = {}
        for record in self.store.all_records():
            by_table.setdefault(record.table.value, []).append(
                canonical_json(record.to_dict())
            )
        for table, lines in sorted(by_table.items()):
            (memory_dir / f"{table}.jsonl").write_text(
                "\n".join(lines) + "\n", encoding="utf-8"
            )
        paths["memory"] = str(memory_dir)
        return paths

    # -- internals ----------------------------------------------------------

    def _emit(self, kind: str, payload: Mapping[str, Any]) -> None:
        event = RunEvent(seq=len(self.events) + 1, kind=kind, payload=dict(payload))
        self.events.append(event)

    def _set_status(self, task_id: str, new: TaskStatus, reason: str | None = None) -> None:
        task = self.tasks[task_id]
        if not transition_allowed(task.status, new):
            raise ContractViolation(
                f"illegal status transition {task.status.value} -> {new.value} "
                f"for task '{task_id}'"
            )
        self.tasks[task_id] = replace(task, status=new)
        payload = {
            "task_id": task_id,
            "from": task.status.value,
            "to": new.value,
            "revision_count": self.tasks[task_id].revision_count,
        }
        if reason:
            payload["reason"] = reason
        self._emit(TASK_STATUS_CHANGED, payload)

    def _on_asset_written(self, record: AssetRecord) -> None:
        self._emit(
            ASSET_STORED,
            {
                "table": record.table.value,
                "id": record.record_id,
                "version": record.version,
                "producer": record.producer,
                "branch": record.branch,
            },
        )


def _character_slugs(names: Iterable[str]) -> list[str]:
    return [slugify(n) for n in names]


def run_pipeline(
    story: Story,
    config: RunConfig,
    registry: ToolRegistry | None = None,
    store: AssetStore | None = None,
) -> FinalManifest:
    """Plan and execute one full run for an already-segmented story."""
    director = Director(config, registry=registry, store=store)
    director.prepare(story=story)
    return director.execute()


def run_pipeline_from_text(
    story_text: str, config: RunConfig, registry: ToolRegistry | None = None
) -> tuple[FinalManifest, Director]:
    """Segment, plan, and execute; returns the manifest and the director."""
    director = Director(config, registry=registry)
    director.prepare(story_text=story_text)
    manifest = director.execute()
    return manifest, director
