"""Shared domain types: narrative units, tasks, the dependency graph, asset
rows, tool metadata, evaluation reports, and the final manifest.

Every type here is an immutable value with a canonical JSON form (snake_case
keys, sorted, no insignificant whitespace). That form is the contract for
persistence and for the wire protocol.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping


def canonical_json(value: Any) -> str:
    """Serialize to the canonical form: sorted keys, compact, UTF-8."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(value: Any) -> str:
    """Stable hex digest of a value's canonical JSON form."""
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


class TaskKind(str, Enum):
    CHARACTER_DESIGN = "character_design"
    SCENE_DESIGN = "scene_design"
    STORYBOARD = "storyboard"
    ANIMATION = "animation"
    AUDIO = "audio"
    EDIT = "edit"
    EVALUATE = "evaluate"


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    NEEDS_REVISION = "needs_revision"
    FAILED = "failed"
    AWAITING_REVIEW = "awaiting_review"


class TableName(str, Enum):
    SHOT = "shot"
    SCENE = "scene"
    CHARACTER = "character"
    STYLE = "style"
    STORYBOARD = "storyboard"
    VIDEO = "video"
    MUSIC = "music"


class Verdict(str, Enum):
    ACCEPT = "accept"
    REVISE = "revise"
    ESCALATE = "escalate"


class Capability(str, Enum):
    EMPTY_SCENE = "empty_scene"
    IDENTITY_CONSISTENCY = "identity_consistency"
    SPATIAL_CONTROL = "spatial_control"


# Exact column list per asset table; key_fields of a record must match it.
TABLE_FIELDS: dict[TableName, tuple[str, ...]] = {
    TableName.SHOT: ("id", "description"),
    TableName.SCENE: ("id", "prompt", "view_3d"),
    TableName.CHARACTER: ("id", "prompt", "demo_voice", "voice_prompt", "3d_view"),
    TableName.STYLE: ("id", "visual_style", "acoustic_style"),
    TableName.STORYBOARD: ("id", "prompt", "image_path"),
    TableName.VIDEO: ("id", "prompt", "video_path", "shot_id", "music_id"),
    TableName.MUSIC: ("id", "character_id", "prompt", "music_path"),
}

# Text-ish column used for embedding retrieval, per table.
TABLE_PROMPT_FIELD: dict[TableName, str] = {
    TableName.SHOT: "description",
    TableName.SCENE: "prompt",
    TableName.CHARACTER: "prompt",
    TableName.STYLE: "visual_style",
    TableName.STORYBOARD: "prompt",
    TableName.VIDEO: "prompt",
    TableName.MUSIC: "prompt",
}


@dataclass(frozen=True)
class Shot:
    """One shot of a scene: a sentence-level narrative unit.

    ``speaker`` is set when the shot came from a dialogue-marker line
    ("Name: ..."); establishing shots have no characters at all.
    """

    id: str
    description: str
    characters: tuple[str, ...] = ()
    is_establishing: bool = False
    needs_layout: bool = False
    speaker: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "characters": list(self.characters),
            "is_establishing": self.is_establishing,
            "needs_layout": self.needs_layout,
            "speaker": self.speaker,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Shot":
        return cls(
            id=data["id"],
            description=data["description"],
            characters=tuple(data.get("characters", ())),
            is_establishing=bool(data.get("is_establishing", False)),
            needs_layout=bool(data.get("needs_layout", False)),
            speaker=data.get("speaker"),
        )


@dataclass(frozen=True)
class Scene:
    """A scene: a blank-line-delimited block of the script and its shots.

    ``span`` is the half-open [start, end) character range of the script
    covered by this scene; consecutive scene spans tile the whole script.
    """

    id: str
    prompt: str
    shots: tuple[Shot, ...] = ()
    span: tuple[int, int] = (0, 0)
    view_3d: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "shots": [s.to_dict() for s in self.shots],
            "span": list(self.span),
            "view_3d": self.view_3d,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scene":
        return cls(
            id=data["id"],
            prompt=data["prompt"],
            shots=tuple(Shot.from_dict(s) for s in data.get("shots", ())),
            span=tuple(data.get("span", (0, 0))),  # type: ignore[arg-type]
            view_3d=data.get("view_3d"),
        )


@dataclass(frozen=True)
class Story:
    """A full script decomposed into ordered scenes."""

    id: str
    raw_text: str
    scenes: tuple[Scene, ...] = ()

    def all_shots(self) -> list[Shot]:
        return [shot for scene in self.scenes for shot in scene.shots]

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "raw_text": self.raw_text,
            "scenes": [s.to_dict() for s in self.scenes],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Story":
        return cls(
            id=data["id"],
            raw_text=data["raw_text"],
            scenes=tuple(Scene.from_dict(s) for s in data.get("scenes", ())),
        )


@dataclass(frozen=True)
class StyleVector:
    """Visual and acoustic style tags; lowercase, deduplicated, sorted."""

    visual_style: tuple[str, ...]
    acoustic_style: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "visual_style": list(self.visual_style),
            "acoustic_style": list(self.acoustic_style),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StyleVector":
        return cls(
            visual_style=tuple(data["visual_style"]),
            acoustic_style=tuple(data["acoustic_style"]),
        )


@dataclass(frozen=True)
class Task:
    """One production work unit, dispatched to a single agent."""

    id: str
    kind: TaskKind
    agent: str
    payload: Mapping[str, Any] = field(default_factory=dict)
    status: TaskStatus = TaskStatus.PENDING
    revision_count: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "agent": self.agent,
            "payload": dict(self.payload),
            "status": self.status.value,
            "revision_count": self.revision_count,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Task":
        return cls(
            id=data["id"],
            kind=TaskKind(data["kind"]),
            agent=data["agent"],
            payload=dict(data.get("payload", {})),
            status=TaskStatus(data.get("status", "pending")),
            revision_count=int(data.get("revision_count", 0)),
        )


# Allowed status transitions. Revision handling may demand a re-run after a
# task already succeeded (late evaluation verdicts, upstream asset churn),
# hence the succeeded -> needs_revision edge.
ALLOWED_TRANSITIONS: dict[TaskStatus, frozenset[TaskStatus]] = {
    TaskStatus.PENDING: frozenset({TaskStatus.RUNNING}),
    TaskStatus.RUNNING: frozenset(
        {
            TaskStatus.SUCCEEDED,
            TaskStatus.NEEDS_REVISION,
            TaskStatus.FAILED,
            TaskStatus.AWAITING_REVIEW,
        }
    ),
    TaskStatus.SUCCEEDED: frozenset({TaskStatus.NEEDS_REVISION, TaskStatus.AWAITING_REVIEW}),
    TaskStatus.NEEDS_REVISION: frozenset({TaskStatus.PENDING}),
    TaskStatus.AWAITING_REVIEW: frozenset({TaskStatus.SUCCEEDED, TaskStatus.NEEDS_REVISION}),
    TaskStatus.FAILED: frozenset(),
}


def transition_allowed(current: TaskStatus, new: TaskStatus) -> bool:
    return new in ALLOWED_TRANSITIONS[current]


@dataclass(frozen=True)
class WorkflowGraph:
    """Dependency DAG over task ids; edge (a, b) means a completes before b."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def successors(self, node: str) -> set[str]:
        return {b for a, b in self.edges if a == node}

    def predecessors(self, node: str) -> set[str]:
        return {a for a, b in self.edges if b == node}

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": sorted(self.nodes),
            "edges": sorted([a, b] for a, b in self.edges),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WorkflowGraph":
        return cls(
            nodes=frozenset(data["nodes"]),
            edges=frozenset((a, b) for a, b in data["edges"]),
        )


@dataclass(frozen=True)
class AssetRecord:
    """One immutable version of a row in an asset table."""

    table: TableName
    key_fields: Mapping[str, Any]
    version: int
    producer: str
    branch: str = "main"

    @property
    def record_id(self) -> str:
        return str(self.key_fields.get("id", ""))

    def to_dict(self) -> dict[str, Any]:
        return {
            "table": self.table.value,
            "key_fields": dict(self.key_fields),
            "version": self.version,
            "producer": self.producer,
            "branch": self.branch,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AssetRecord":
        return cls(
            table=TableName(data["table"]),
            key_fields=dict(data["key_fields"]),
            version=int(data["version"]),
            producer=data["producer"],
            branch=data.get("branch", "main"),
        )


# Capability matrix fixed for the three storyboard generation tools; a
# descriptor using one of these names must carry exactly these flags.
STORYBOARD_TOOL_CAPABILITIES: dict[str, frozenset[Capability]] = {
    "text_to_image": frozenset({Capability.EMPTY_SCENE}),
    "reference_image_generation": frozenset({Capability.IDENTITY_CONSISTENCY}),
    "layout_guided_generation": frozenset(
        {Capability.SPATIAL_CONTROL, Capability.IDENTITY_CONSISTENCY}
    ),
}


@dataclass(frozen=True)
class ToolDescriptor:
    """A tool's advertised functionality, capability flags, and trade-offs."""

    name: str
    functionality: str
    capabilities: frozenset[Capability]
    pros: tuple[str, ...] = ()
    cons: tuple[str, ...] = ()
    cost_rank: int = 1

    def validate(self) -> list[str]:
        violations = []
        expected = STORYBOARD_TOOL_CAPABILITIES.get(self.name)
        if expected is not None and self.capabilities != expected:
            violations.append(
                f"tool '{self.name}' must declare capabilities "
                f"{sorted(c.value for c in expected)}, "
                f"got {sorted(c.value for c in self.capabilities)}"
            )
        if self.cost_rank < 1:
            violations.append(f"tool '{self.name}' cost_rank must be >= 1")
        return violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "functionality": self.functionality,
            "capabilities": sorted(c.value for c in self.capabilities),
            "pros": list(self.pros),
            "cons": list(self.cons),
            "cost_rank": self.cost_rank,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolDescriptor":
        return cls(
            name=data["name"],
            functionality=data.get("functionality", ""),
            capabilities=frozenset(Capability(c) for c in data.get("capabilities", ())),
            pros=tuple(data.get("pros", ())),
            cons=tuple(data.get("cons", ())),
            cost_rank=int(data.get("cost_rank", 1)),
        )


@dataclass(frozen=True)
class EvaluationReport:
    """Quality verdict for one produced asset."""

    task_id: str
    text_similarity: float
    identity_ok: bool
    av_sync_ok: bool
    narrative_ok: bool
    verdict: Verdict
    recommended_tool: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "text_similarity": self.text_similarity,
            "identity_ok": self.identity_ok,
            "av_sync_ok": self.av_sync_ok,
            "narrative_ok": self.narrative_ok,
            "verdict": self.verdict.value,
            "recommended_tool": self.recommended_tool,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationReport":
        return cls(
            task_id=data["task_id"],
            text_similarity=float(data["text_similarity"]),
            identity_ok=bool(data["identity_ok"]),
            av_sync_ok=bool(data["av_sync_ok"]),
            narrative_ok=bool(data["narrative_ok"]),
            verdict=Verdict(data["verdict"]),
            recommended_tool=data.get("recommended_tool"),
        )


@dataclass(frozen=True)
class ManifestEntry:
    """One assembled shot: its video, ordered audio stems, and transition."""

    shot_id: str
    video: str
    audio: tuple[str, ...]
    transition: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "shot_id": self.shot_id,
            "video": self.video,
            "audio": list(self.audio),
            "transition": self.transition,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ManifestEntry":
        return cls(
            shot_id=data["shot_id"],
            video=data["video"],
            audio=tuple(data["audio"]),
            transition=data["transition"],
        )


@dataclass(frozen=True)
class FinalManifest:
    """The assembled production manifest: one entry per shot, in story order."""

    run_id: str
    entries: tuple[ManifestEntry, ...]
    styles: StyleVector

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "entries": [e.to_dict() for e in self.entries],
            "styles": self.styles.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FinalManifest":
        return cls(
            run_id=data["run_id"],
            entries=tuple(ManifestEntry.from_dict(e) for e in data["entries"]),
            styles=StyleVector.from_dict(data["styles"]),
        )


def validate_story(story: Story) -> list[str]:
    """Check every Story/Scene/Shot invariant; returns violation descriptions."""
    violations: list[str] = []

    seen_scenes: set[str] = set()
    for scene in story.scenes:
        if scene.id in seen_scenes:
            violations.append(f"duplicate scene id '{scene.id}'")
        seen_scenes.add(scene.id)

        seen_shots: set[str] = set()
        for shot in scene.shots:
            if shot.id in seen_shots:
                violations.append(f"duplicate shot id '{shot.id}' in scene '{scene.id}'")
            seen_shots.add(shot.id)
            if not shot.id.startswith(scene.id):
                violations.append(
                    f"shot id '{shot.id}' is not prefixed by its scene id '{scene.id}'"
                )
            if shot.is_establishing and shot.characters:
                violations.append(
                    f"establishing shot '{shot.id}' lists characters "
                    f"{sorted(shot.characters)}"
                )

    # Scene spans must tile raw_text: contiguous, in order, no gaps or overlap.
    if story.scenes:
        expected_start = 0
        for scene in story.scenes:
            start, end = scene.span
            if start != expected_start:
                violations.append(
                    f"scene '{scene.id}' span starts at {start}, expected {expected_start}"
                )
            if end < start:
                violations.append(f"scene '{scene.id}' span ends before it starts")
            expected_start = end
        if expected_start != len(story.raw_text):
            violations.append(
                f"scene spans cover {expected_start} of {len(story.raw_text)} characters"
            )
    return violations


def validate_graph(graph: WorkflowGraph) -> list[str]:
    """Check edge endpoints and acyclicity (Kahn's algorithm)."""
    violations = []
    for a, b in sorted(graph.edges):
        if a not in graph.nodes:
            violations.append(f"edge source '{a}' is not a node")
        if b not in graph.nodes:
            violations.append(f"edge target '{b}' is not a node")
    if violations:
        return violations

    indegree = {node: 0 for node in graph.nodes}
    for _, b in graph.edges:
        indegree[b] += 1
    queue = [n for n, d in indegree.items() if d == 0]
    visited = 0
    while queue:
        node = queue.pop()
        visited += 1
        for succ in graph.successors(node):
            indegree[succ] -= 1
            if indegree[succ] == 0:
                queue.append(succ)
    if visited != len(graph.nodes):
        cyclic = sorted(n for n, d in indegree.items() if d > 0)
        violations.append(f"graph contains a cycle through {cyclic}")
    return violations
