"""The specialized executors: storyboard, character design, scene design,
animation, audio production, editing, and quality evaluation.

Every agent is stateless between requests: output is a pure function of the
request envelope, asset-memory reads, the registry, and the seed. Generative
backends are mock adapters that hash their parameters into content digests,
so orchestration behavior is byte-stable and fully testable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .config import RunConfig
from .memory import (
    ANIMATOR,
    AUDIO_PRODUCTION,
    CHARACTER_DESIGNER,
    QUALITY_EVALUATOR,
    SCENE_DESIGNER,
    STORYBOARD_AGENT,
    VIDEO_EDITOR,
    AssetStore,
    NotFound,
    tokenize,
)
from .model import (
    AssetRecord,
    Capability,
    EvaluationReport,
    FinalManifest,
    ManifestEntry,
    StyleVector,
    TableName,
    Verdict,
    canonical_json,
    digest,
)
from .planning import slugify
from .protocol import Envelope, response_envelope
from .registry import TaskRequirements, ToolInvoker, ToolRegistry
from .segmentation import has_spatial_language, split_into_panels

_PRONOUNS = frozenset(
    {"he", "him", "his", "she", "her", "hers", "they", "them", "their", "theirs"}
)

FRAME_SIZE = 1024
CAMERA_ANGLES = (30, 45, 60)


class AgentError(Exception):
    pass


class DependencyError(AgentError):
    """An input asset the request relies on is not in memory."""


@dataclass(frozen=True)
class MockAsset:
    """A generated artifact stand-in: descriptor plus its content digest."""

    asset_id: str
    kind: str  # image | video | audio | music
    descriptor: Mapping[str, Any]
    content_digest: str

    @property
    def path(self) -> str:
        return f"assets/{self.asset_id}.{self.content_digest[:8]}.json"

    def to_dict(self) -> dict[str, Any]:
        return {
            "asset_id": self.asset_id,
            "kind": self.kind,
            "descriptor": dict(self.descriptor),
            "content_digest": self.content_digest,
        }


def make_asset(asset_id: str, kind: str, descriptor: Mapping[str, Any]) -> MockAsset:
    return MockAsset(
        asset_id=asset_id,
        kind=kind,
        descriptor=dict(descriptor),
        content_digest=digest(descriptor),
    )


class AssetVault:
    """Generated assets by id; latest version wins, files mirror by digest."""

    def __init__(self) -> None:
        self._assets: dict[str, MockAsset] = {}

    def put(self, asset: MockAsset) -> MockAsset:
        self._assets[asset.asset_id] = asset
        return asset

    def get(self, asset_id: str) -> MockAsset | None:
        return self._assets.get(asset_id)

    def require(self, asset_id: str, what: str) -> MockAsset:
        asset = self._assets.get(asset_id)
        if asset is None:
            raise DependencyError(f"{what} ('{asset_id}') is not in asset memory")
        return asset

    def ids(self) -> list[str]:
        return sorted(self._assets)

    def all_assets(self) -> list[MockAsset]:
        return [self._assets[k] for k in sorted(self._assets)]


@dataclass
class AgentContext:
    """Everything an agent may touch while executing one request."""

    store: AssetStore
    vault: AssetVault
    registry: ToolRegistry
    invoker: ToolInvoker
    config: RunConfig
    seed: int = 0


def identity_token(description: str, style_tags: list[str] | tuple[str, ...]) -> str:
    """Stable identity fingerprint for a character design."""
    return digest([description, sorted(style_tags)])[:16]


@dataclass(frozen=True)
class StoryboardShot:
    """One planned storyboard panel."""

    shot_id: str
    tool: str
    prompt: str
    reference_images: tuple[str, ...] = ()
    layout_bboxes: tuple[Mapping[str, Any], ...] = ()
    notes: str = ""

    def validate(self) -> None:
        if self.tool == "layout_guided_generation" and not self.layout_bboxes:
            raise ValueError(f"panel '{self.shot_id}': layout tool requires layout_bboxes")
        for box in self.layout_bboxes:
            x1, y1, x2, y2 = box["bbox"]
            if not (x1 < x2 and y1 < y2):
                raise ValueError(f"panel '{self.shot_id}': bbox corners out of order")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "shot_id": self.shot_id,
            "tool": self.tool,
            "prompt": self.prompt,
            "notes": self.notes,
        }
        if self.reference_images:
            out["reference_images"] = list(self.reference_images)
        if self.layout_bboxes:
            out["layout_bboxes"] = [dict(b) for b in self.layout_bboxes]
        return out


def _payload(request: Envelope) -> Mapping[str, Any]:
    return request.extensions.get("payload", {})


class Agent:
    """Base executor: unwrap the request, run, wrap the response."""

    name = "Agent"

    def execute(self, request: Envelope, ctx: AgentContext) -> Envelope:
        outputs = self.run(_payload(request), ctx)
        return response_envelope(request, outputs, producer=self.name)

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        raise NotImplementedError


def panel_characters(
    panel_texts: list[str], shot_characters: list[str]
) -> list[tuple[str, ...]]:
    """Characters per panel: direct name matches, with pronoun antecedents
    carrying over from the previous panel."""
    result: list[tuple[str, ...]] = []
    for index, text in enumerate(panel_texts):
        direct = {
            name
            for name in shot_characters
            if re.search(rf"\b{re.escape(name)}\b", text, flags=re.IGNORECASE)
        }
        words = {w.lower() for w in re.findall(r"[A-Za-z']+", text)}
        has_pronoun = bool(words & _PRONOUNS)
        previous = set(result[index - 1]) if index > 0 else set()
        if has_pronoun:
            if direct:
                chars = direct | previous
            elif index > 0:
                chars = previous
            else:
                chars = set(shot_characters)
        else:
            chars = direct
        result.append(tuple(sorted(chars)))
    return result


def _panel_id(parent_id: str, index: int) -> str:
    if "_shot_" in parent_id:
        return f"{parent_id}_{index + 1:02d}"
    return f"{parent_id}_shot_{index + 1:02d}"


def _layout_boxes(characters: tuple[str, ...]) -> tuple[dict[str, Any], ...]:
    """Deterministic column layout, left to right in character order."""
    if not characters:
        return (
            {
                "object": "subject",
                "bbox": [64, 64, FRAME_SIZE - 64, FRAME_SIZE - 64],
                "notes": "whole frame",
            },
        )
    count = len(characters)
    column = FRAME_SIZE // count
    boxes = []
    for index, name in enumerate(characters):
        if count == 1:
            position = "centered"
        elif index == 0:
            position = "left side of the frame"
        elif index == count - 1:
            position = "right side of the frame"
        else:
            position = "center of the frame"
        boxes.append(
            {
                "object": name,
                "bbox": [index * column + 32, 256, (index + 1) * column - 32, 896],
                "notes": f"{position}; full body visible",
            }
        )
    return tuple(boxes)


class StoryboardExecutor(Agent):
    """Splits a shot description into panels, picks a tool per panel, and
    emits one mock keyframe per panel plus a camera plan."""

    name = STORYBOARD_AGENT

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        shot_id = payload["shot_id"]
        description = payload["prompt"]
        shot_chars = list(payload.get("characters", ()))
        style = list(payload.get("visual_style", ()))
        override = payload.get("tool_override")
        note = payload.get("revision_note")

        panel_texts = split_into_panels(description)
        chars_per_panel = panel_characters(panel_texts, shot_chars)

        panels: list[StoryboardShot] = []
        keyframes: list[str] = []
        panel_ids: list[str] = []
        tools: list[str] = []
        identity_tokens: dict[str, str] = {}

        for index, text in enumerate(panel_texts):
            characters = chars_per_panel[index]
            establishing = not characters
            requirements = TaskRequirements(
                needs_identity=bool(characters),
                needs_spatial=len(characters) >= 2 or has_spatial_language(text),
                is_establishing=establishing,
                style_tags=tuple(style),
            )
            if override and ctx.registry.has_tool(self.name, override):
                tool = override
            else:
                tool = ctx.registry.select_tool(self.name, requirements).name

            references = []
            for name in characters:
                character_id = f"char_{slugify(name)}"
                try:
                    row = ctx.store.get(TableName.CHARACTER, character_id)
                except NotFound:
                    raise DependencyError(
                        f"character asset for '{name}' is missing from memory"
                    ) from None
                references.append(str(row.key_fields.get("3d_view")))
                identity_tokens[character_id] = identity_token(
                    str(row.key_fields.get("prompt")), style
                )

            boxes = (
                _layout_boxes(characters) if tool == "layout_guided_generation" else ()
            )
            if establishing:
                notes = "environment-only establishing panel"
            elif boxes:
                notes = "explicit spatial arrangement of " + ", ".join(characters)
            else:
                notes = "preserves character identity"

            panel_id = _panel_id(shot_id, index)
            params: dict[str, Any] = {
                "prompt": text,
                "shot_id": panel_id,
                "style": style,
            }
            if references:
                params["reference_images"] = references
            if boxes:
                params["layout_bboxes"] = [dict(b) for b in boxes]
            if note:
                params["guidance"] = note
            generated = ctx.invoker.invoke(self.name, tool, params, ctx.seed)
            keyframe = ctx.vault.put(
                MockAsset(
                    asset_id=f"kf_{panel_id}",
                    kind="image",
                    descriptor=generated["descriptor"],
                    content_digest=generated["content_digest"],
                )
            )

            panel = StoryboardShot(
                shot_id=panel_id,
                tool=tool,
                prompt=text,
                reference_images=tuple(references),
                layout_bboxes=boxes,
                notes=notes,
            )
            panel.validate()
            panels.append(panel)
            panel_ids.append(panel_id)
            tools.append(tool)
            keyframes.append(keyframe.path)

            ctx.store.put(
                AssetRecord(
                    table=TableName.STORYBOARD,
                    key_fields={"id": panel_id, "prompt": text, "image_path": keyframe.path},
                    version=1,
                    producer=self.name,
                ),
                producer=self.name,
            )

        camera_plan = {
            "angles": [CAMERA_ANGLES[i % len(CAMERA_ANGLES)] for i in range(len(panels))],
            "transitions": [
                "fade"
                if i == 0 and payload.get("scene_start") and not payload.get("speaker")
                else "cut"
                for i in range(len(panels))
            ],
        }

        combined = ctx.vault.put(
            make_asset(
                f"storyboard_{shot_id}",
                "image",
                {
                    "shot_id": shot_id,
                    "prompt": " ".join(panel_texts),
                    "tools": tools,
                    "panels": panel_ids,
                    "keyframes": keyframes,
                    "camera_plan": camera_plan,
                    "identity_tokens": identity_tokens,
                    "seed": ctx.seed,
                },
            )
        )
        return {
            "storyboard_shots": [p.to_dict() for p in panels],
            "camera_plan": camera_plan,
            "keyframes": keyframes,
            "asset_id": combined.asset_id,
        }


class CharacterDesignExecutor(Agent):
    """Emits front/side/back reference views sharing one identity token."""

    name = CHARACTER_DESIGNER

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        name = payload["character"]
        character_id = payload.get("character_id") or f"char_{slugify(name)}"
        prompt = payload["prompt"]
        style = list(payload.get("visual_style", ()))
        token = identity_token(prompt, style)
        # Voice fields belong to audio production; carry them through re-runs.
        demo_voice = voice_prompt = None
        try:
            existing = ctx.store.get(TableName.CHARACTER, character_id)
            demo_voice = existing.key_fields.get("demo_voice")
            voice_prompt = existing.key_fields.get("voice_prompt")
        except NotFound:
            pass
        tool = ctx.registry.select_tool(
            self.name, TaskRequirements(needs_identity=True, style_tags=tuple(style))
        ).name

        views: dict[str, str] = {}
        primary_id = ""
        for view in ("front", "side", "back"):
            params = {
                "prompt": prompt,
                "character": name,
                "character_id": character_id,
                "view": view,
                "style": style,
                "identity_token": token,
            }
            if payload.get("revision_note"):
                params["guidance"] = payload["revision_note"]
            generated = ctx.invoker.invoke(self.name, tool, params, ctx.seed)
            asset = ctx.vault.put(
                MockAsset(
                    asset_id=f"{character_id}_{view}",
                    kind="image",
                    descriptor=generated["descriptor"],
                    content_digest=generated["content_digest"],
                )
            )
            views[view] = asset.path
            if view == "front":
                primary_id = asset.asset_id

        ctx.store.put(
            AssetRecord(
                table=TableName.CHARACTER,
                key_fields={
                    "id": character_id,
                    "prompt": prompt,
                    "demo_voice": demo_voice,
                    "voice_prompt": voice_prompt,
                    "3d_view": views["front"],
                },
                version=1,
                producer=self.name,
            ),
            producer=self.name,
        )
        return {
            "character_id": character_id,
            "identity_token": token,
            "views": views,
            "asset_id": primary_id,
        }


class SceneDesignExecutor(Agent):
    """Emits a layered background asset for one scene."""

    name = SCENE_DESIGNER

    LAYERS = ("background", "midground", "foreground")

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        scene_id = payload["scene_id"]
        prompt = payload["prompt"]
        style = list(payload.get("visual_style", ()))
        override = payload.get("tool_override")
        requirements = TaskRequirements(
            needs_spatial=has_spatial_language(prompt), style_tags=tuple(style)
        )
        if override and ctx.registry.has_tool(self.name, override):
            tool = override
        else:
            tool = ctx.registry.select_tool(self.name, requirements).name

        params: dict[str, Any] = {
            "prompt": prompt,
            "scene_id": scene_id,
            "style": style,
            "layers": list(self.LAYERS),
        }
        if payload.get("revision_note"):
            params["guidance"] = payload["revision_note"]
        generated = ctx.invoker.invoke(self.name, tool, params, ctx.seed)
        asset = ctx.vault.put(
            MockAsset(
                asset_id=f"bg_{scene_id}",
                kind="image",
                descriptor=generated["descriptor"],
                content_digest=generated["content_digest"],
            )
        )
        ctx.store.put(
            AssetRecord(
                table=TableName.SCENE,
                key_fields={"id": scene_id, "prompt": prompt, "view_3d": asset.path},
                version=1,
                producer=self.name,
            ),
            producer=self.name,
        )
        return {"scene_id": scene_id, "tool": tool, "layers": list(self.LAYERS), "asset_id": asset.asset_id}


class AnimateExecutor(Agent):
    """Turns storyboard keyframes plus a camera plan into a mock video asset."""

    name = ANIMATOR

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        shot_id = payload["shot_id"]
        storyboard = ctx.vault.require(
            f"storyboard_{shot_id}", f"storyboard keyframes for shot '{shot_id}'"
        )
        audio_id = None
        if payload.get("lip_sync"):
            mix_id = payload.get("audio_mix_id")
            if not mix_id or ctx.vault.get(mix_id) is None:
                raise DependencyError(
                    f"lip sync for shot '{shot_id}' requires audio mix "
                    f"'{mix_id or f'mix_{shot_id}'}' before animation"
                )
            audio_id = mix_id

        panels = list(storyboard.descriptor.get("panels", ()))
        camera_plan = storyboard.descriptor.get("camera_plan", {})
        params: dict[str, Any] = {
            "prompt": payload["prompt"],
            "shot_id": shot_id,
            "keyframes": panels,
            "camera_plan": camera_plan,
            "audio": audio_id,
            "duration_seconds": ctx.config.seconds_per_shot * max(len(panels), 1),
            "style": list(payload.get("visual_style", ())),
            "identity_tokens": dict(storyboard.descriptor.get("identity_tokens", {})),
        }
        if payload.get("revision_note"):
            params["guidance"] = payload["revision_note"]
        generated = ctx.invoker.invoke(self.name, "conditioned_video_generation", params, ctx.seed)
        asset = ctx.vault.put(
            MockAsset(
                asset_id=f"video_{shot_id}",
                kind="video",
                descriptor=generated["descriptor"],
                content_digest=generated["content_digest"],
            )
        )
        ctx.store.put(
            AssetRecord(
                table=TableName.VIDEO,
                key_fields={
                    "id": asset.asset_id,
                    "prompt": payload["prompt"],
                    "video_path": asset.path,
                    "shot_id": shot_id,
                    "music_id": f"music_{payload['scene_id']}" if payload.get("scene_id") else None,
                },
                version=1,
                producer=self.name,
            ),
            producer=self.name,
        )
        return {
            "asset_id": asset.asset_id,
            "keyframes": panels,
            "duration_seconds": params["duration_seconds"],
        }


class AudioExecutor(Agent):
    """Dialogue per line, music per scene, one mix descriptor per shot.

    Voice prompts are audio-owned character fields: the first dialogue use of
    a character derives and stores a deterministic voice prompt."""

    name = AUDIO_PRODUCTION

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        shot_id = payload["shot_id"]
        scene_id = payload.get("scene_id", "")
        lines = list(payload.get("lines", ()))
        stems: list[str] = []
        dialogue_ids: list[str] = []

        for index, line in enumerate(lines):
            character_id = line.get("character_id") or f"char_{slugify(line['character'])}"
            try:
                row = ctx.store.get(TableName.CHARACTER, character_id)
            except NotFound:
                raise DependencyError(
                    f"character '{line.get('character', character_id)}' has no stored "
                    f"voice_prompt (no character record)"
                ) from None
            voice_prompt = row.key_fields.get("voice_prompt")
            if not voice_prompt:
                voice_prompt = f"voice_{character_id}_{digest(row.key_fields.get('prompt'))[:8]}"
                fields = dict(row.key_fields)
                fields["voice_prompt"] = voice_prompt
                fields["demo_voice"] = f"assets/demo_{character_id}.json"
                ctx.store.put(
                    AssetRecord(
                        table=TableName.CHARACTER,
                        key_fields=fields,
                        version=1,
                        producer=self.name,
                        branch=row.branch,
                    ),
                    producer=self.name,
                )

            generated = ctx.invoker.invoke(
                self.name,
                "speaker_tts",
                {
                    "voice_prompt": voice_prompt,
                    "text": line["text"],
                    "emotion": line.get("emotion", "neutral"),
                    "character_id": character_id,
                },
                ctx.seed,
            )
            asset = ctx.vault.put(
                MockAsset(
                    asset_id=f"dialogue_{shot_id}_{index + 1:02d}",
                    kind="audio",
                    descriptor=generated["descriptor"],
                    content_digest=generated["content_digest"],
                )
            )
            dialogue_ids.append(asset.asset_id)
            stems.append(asset.asset_id)

        music_id = f"music_{scene_id}" if scene_id else None
        if music_id and payload.get("make_music"):
            generated = ctx.invoker.invoke(
                self.name,
                "text_to_music",
                {
                    "prompt": payload.get("scene_prompt", ""),
                    "acoustic_style": list(payload.get("acoustic_style", ())),
                    "scene_id": scene_id,
                },
                ctx.seed,
            )
            music = ctx.vault.put(
                MockAsset(
                    asset_id=music_id,
                    kind="music",
                    descriptor=generated["descriptor"],
                    content_digest=generated["content_digest"],
                )
            )
            ctx.store.put(
                AssetRecord(
                    table=TableName.MUSIC,
                    key_fields={
                        "id": music_id,
                        "character_id": None,
                        "prompt": payload.get("scene_prompt", ""),
                        "music_path": music.path,
                    },
                    version=1,
                    producer=self.name,
                ),
                producer=self.name,
            )
        # The scene music stem is referenced by id; the asset itself may be
        # produced by a sibling shot's audio task later in the same run.
        if music_id:
            stems.append(music_id)

        mixed = ctx.invoker.invoke(
            self.name,
            "audio_mixer",
            {"prompt": payload.get("prompt", ""), "shot_id": shot_id, "stems": stems},
            ctx.seed,
        )
        mix = ctx.vault.put(
            MockAsset(
                asset_id=f"mix_{shot_id}",
                kind="audio",
                descriptor=mixed["descriptor"],
                content_digest=mixed["content_digest"],
            )
        )
        return {
            "dialogue": dialogue_ids,
            "music": music_id if payload.get("make_music") else None,
            "stems": stems,
            "mix": mix.asset_id,
            "asset_id": mix.asset_id,
        }


class EditExecutor(Agent):
    """Assembles the final manifest: shot videos, audio stems, transitions."""

    name = VIDEO_EDITOR

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        entries: list[ManifestEntry] = []
        for shot_id in payload["shot_ids"]:
            video_id = f"video_{shot_id}"
            try:
                ctx.store.get(TableName.VIDEO, video_id)
            except NotFound:
                raise DependencyError(f"missing video for shot '{shot_id}'") from None
            video = ctx.vault.require(video_id, f"video asset for shot '{shot_id}'")
            mix = ctx.vault.require(f"mix_{shot_id}", f"audio mix for shot '{shot_id}'")
            transitions = video.descriptor.get("camera_plan", {}).get("transitions", [])
            entries.append(
                ManifestEntry(
                    shot_id=shot_id,
                    video=video_id,
                    audio=tuple(mix.descriptor.get("stems", ())),
                    transition=transitions[0] if transitions else "cut",
                )
            )

        manifest = FinalManifest(
            run_id=payload.get("run_id", ""),
            entries=tuple(entries),
            styles=StyleVector.from_dict(
                payload.get(
                    "styles", {"visual_style": ["anime"], "acoustic_style": ["orchestral"]}
                )
            ),
        )
        generated = ctx.invoker.invoke(
            self.name,
            "multipass_encoder",
            {
                "prompt": payload.get("prompt", ""),
                "entries": [e.to_dict() for e in entries],
                "run_id": manifest.run_id,
            },
            ctx.seed,
        )
        final_cut = ctx.vault.put(
            MockAsset(
                asset_id="final_cut",
                kind="video",
                descriptor=generated["descriptor"],
                content_digest=generated["content_digest"],
            )
        )
        return {"manifest": manifest.to_dict(), "asset_id": final_cut.asset_id}


class EvaluateExecutor(Agent):
    """Scores a produced asset against the payload that requested it."""

    name = QUALITY_EVALUATOR

    def run(self, payload: Mapping[str, Any], ctx: AgentContext) -> dict[str, Any]:
        asset_id = payload["asset_id"]
        asset = ctx.vault.require(asset_id, "asset under evaluation")
        report = evaluate(
            asset,
            payload.get("target_payload", {}),
            payload.get("thresholds", {}),
            task_id=payload["target_task_id"],
            lookup_asset=ctx.vault.get,
            registry=ctx.registry,
        )
        return {"report": report.to_dict(), "asset_id": asset_id}


def evaluate(
    asset: MockAsset,
    task_payload: Mapping[str, Any],
    thresholds: Mapping[str, Any],
    task_id: str = "",
    lookup_asset: Callable[[str], MockAsset | None] | None = None,
    registry: ToolRegistry | None = None,
) -> EvaluationReport:
    """Deterministic quality report for one asset.

    Text similarity is token overlap against the originating prompt;
    identity compares descriptor tokens with the stored character assets;
    AV sync compares the video's conditioning audio with the shot's mix id;
    the narrative check requires the asset to trace back to its source unit.
    """
    descriptor = asset.descriptor
    spec_tokens = set(tokenize(str(task_payload.get("prompt", ""))))
    desc_tokens = set(tokenize(str(descriptor.get("prompt", ""))))
    if spec_tokens:
        text_similarity = len(spec_tokens & desc_tokens) / len(spec_tokens)
    else:
        text_similarity = 1.0

    identity_ok = True
    claimed = descriptor.get("identity_tokens") or {}
    if claimed and lookup_asset is not None:
        for character_id, token in claimed.items():
            stored = lookup_asset(f"{character_id}_front")
            if stored is None or stored.descriptor.get("identity_token") != token:
                identity_ok = False
                break

    av_sync_ok = True
    if asset.kind == "video" and task_payload.get("lip_sync"):
        av_sync_ok = descriptor.get("audio") == task_payload.get("audio_mix_id")

    anchor = (
        task_payload.get("shot_id")
        or task_payload.get("scene_id")
        or task_payload.get("character_id")
    )
    narrative_ok = True if anchor is None else str(anchor) in canonical_json(dict(descriptor))

    recommended_tool = None
    needs_spatial = bool(task_payload.get("needs_layout")) or len(
        task_payload.get("characters", ())
    ) >= 2
    tools_used = list(descriptor.get("tools") or ())
    if not tools_used and "tool" in descriptor:
        tools_used = [descriptor["tool"]]
    if needs_spatial and tools_used:
        spatial_tools = {"layout_guided_generation"}
        if registry is not None:
            for agent in registry.agents():
                for tool in registry.tools_for(agent):
                    if Capability.SPATIAL_CONTROL in tool.capabilities:
                        spatial_tools.add(tool.name)
        if not set(tools_used) & spatial_tools:
            recommended_tool = "layout_guided_generation"

    threshold = float(thresholds.get("similarity_threshold", 0.85))
    checks_pass = identity_ok and av_sync_ok and narrative_ok
    verdict = (
        Verdict.ACCEPT
        if checks_pass and text_similarity >= threshold and recommended_tool is None
        else Verdict.REVISE
    )
    return EvaluationReport(
        task_id=task_id,
        text_similarity=text_similarity,
        identity_ok=identity_ok,
        av_sync_ok=av_sync_ok,
        narrative_ok=narrative_ok,
        verdict=verdict,
        recommended_tool=recommended_tool,
    )


def build_agents() -> dict[str, Agent]:
    """Executor per agent name; the director dispatches through this map."""
    executors: list[Agent] = [
        StoryboardExecutor(),
        CharacterDesignExecutor(),
        SceneDesignExecutor(),
        AnimateExecutor(),
        AudioExecutor(),
        EditExecutor(),
        EvaluateExecutor(),
    ]
    return {agent.name: agent for agent in executors}
