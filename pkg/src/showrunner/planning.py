"""Task planning: expand a segmented story into production tasks and their
dependency graph.

Per character one design task; per scene one scene-design task; per shot a
storyboard, an animation, and an audio task; one edit task; and one evaluate
task per producing task. Lip-synced shots additionally order audio before
animation, and speaking characters' design tasks precede their audio tasks,
since those executions read the upstream rows.
"""

from __future__ import annotations

import re

from .memory import (
    ANIMATOR,
    AUDIO_PRODUCTION,
    CHARACTER_DESIGNER,
    QUALITY_EVALUATOR,
    SCENE_DESIGNER,
    STORYBOARD_AGENT,
    VIDEO_EDITOR,
)
from .model import Story, StyleVector, Task, TaskKind, WorkflowGraph

KIND_AGENTS: dict[TaskKind, str] = {
    TaskKind.CHARACTER_DESIGN: CHARACTER_DESIGNER,
    TaskKind.SCENE_DESIGN: SCENE_DESIGNER,
    TaskKind.STORYBOARD: STORYBOARD_AGENT,
    TaskKind.ANIMATION: ANIMATOR,
    TaskKind.AUDIO: AUDIO_PRODUCTION,
    TaskKind.EDIT: VIDEO_EDITOR,
    TaskKind.EVALUATE: QUALITY_EVALUATOR,
}


class PlanningError(ValueError):
    pass


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    return slug or "unnamed"


def emotion_label(text: str) -> str:
    """Deterministic emotion tag from line punctuation."""
    stripped = text.rstrip()
    if stripped.endswith("!"):
        return "agitated"
    if stripped.endswith("?"):
        return "inquisitive"
    return "neutral"


def dialogue_line(text: str) -> str:
    """The spoken part of a dialogue-marker shot description."""
    if ":" in text:
        return text.split(":", 1)[1].strip()
    return text.strip()


def plan_tasks(
    story: Story,
    styles: StyleVector,
    character_lexicon: dict[str, str] | None = None,
) -> tuple[list[Task], WorkflowGraph]:
    """Build the task list and workflow graph for a validated story."""
    if not story.scenes:
        raise PlanningError("empty story: nothing to plan")
    lexicon = character_lexicon or {}

    tasks: dict[str, Task] = {}
    edges: set[tuple[str, str]] = set()

    def add(task: Task) -> None:
        tasks[task.id] = task

    # Character roster, in first-appearance-agnostic sorted order.
    characters = sorted({c for shot in story.all_shots() for c in shot.characters})
    char_task_ids = {}
    for name in characters:
        slug = slugify(name)
        task_id = f"character_design_{slug}"
        char_task_ids[name] = task_id
        add(
            Task(
                id=task_id,
                kind=TaskKind.CHARACTER_DESIGN,
                agent=CHARACTER_DESIGNER,
                payload={
                    "character": name,
                    "character_id": f"char_{slug}",
                    "prompt": lexicon.get(name) or name,
                    "visual_style": list(styles.visual_style),
                },
            )
        )

    all_shot_descriptions = []
    for scene in story.scenes:
        scene_task_id = f"scene_design_{scene.id}"
        add(
            Task(
                id=scene_task_id,
                kind=TaskKind.SCENE_DESIGN,
                agent=SCENE_DESIGNER,
                payload={
                    "scene_id": scene.id,
                    "prompt": scene.prompt,
                    "visual_style": list(styles.visual_style),
                },
            )
        )

        for position, shot in enumerate(scene.shots):
            all_shot_descriptions.append(shot.description)
            storyboard_id = f"storyboard_{shot.id}"
            animation_id = f"animation_{shot.id}"
            audio_id = f"audio_{shot.id}"
            lip_sync = shot.speaker is not None

            add(
                Task(
                    id=storyboard_id,
                    kind=TaskKind.STORYBOARD,
                    agent=STORYBOARD_AGENT,
                    payload={
                        "shot_id": shot.id,
                        "prompt": shot.description,
                        "characters": list(shot.characters),
                        "speaker": shot.speaker,
                        "is_establishing": shot.is_establishing,
                        "needs_layout": shot.needs_layout,
                        "scene_id": scene.id,
                        "scene_start": position == 0,
                        "visual_style": list(styles.visual_style),
                    },
                )
            )
            add(
                Task(
                    id=animation_id,
                    kind=TaskKind.ANIMATION,
                    agent=ANIMATOR,
                    payload={
                        "shot_id": shot.id,
                        "prompt": shot.description,
                        "scene_id": scene.id,
                        "lip_sync": lip_sync,
                        "audio_mix_id": f"mix_{shot.id}" if lip_sync else None,
                        "visual_style": list(styles.visual_style),
                    },
                )
            )

            lines = []
            if shot.speaker is not None:
                text = dialogue_line(shot.description)
                lines.append(
                    {
                        "character": shot.speaker,
                        "character_id": f"char_{slugify(shot.speaker)}",
                        "text": text,
                        "emotion": emotion_label(text),
                    }
                )
            audio_prompt = (
                " ".join(line["text"] for line in lines) if lines else scene.prompt
            )
            add(
                Task(
                    id=audio_id,
                    kind=TaskKind.AUDIO,
                    agent=AUDIO_PRODUCTION,
                    payload={
                        "shot_id": shot.id,
                        "scene_id": scene.id,
                        "prompt": audio_prompt,
                        "lines": lines,
                        "make_music": position == 0,
                        "scene_prompt": scene.prompt,
                        "acoustic_style": list(styles.acoustic_style),
                    },
                )
            )

            edges.add((scene_task_id, storyboard_id))
            for name in shot.characters:
                edges.add((char_task_ids[name], storyboard_id))
            edges.add((storyboard_id, animation_id))
            edges.add((animation_id, "edit"))
            edges.add((audio_id, "edit"))
            if lip_sync:
                edges.add((audio_id, animation_id))
                edges.add((char_task_ids[shot.speaker], audio_id))

    add(
        Task(
            id="edit",
            kind=TaskKind.EDIT,
            agent=VIDEO_EDITOR,
            payload={
                "shot_ids": [shot.id for shot in story.all_shots()],
                "prompt": " ".join(all_shot_descriptions),
            },
        )
    )

    # One evaluation gate per producing task.
    for producing_id in sorted(tasks):
        evaluate_id = f"evaluate_{producing_id}"
        add(
            Task(
                id=evaluate_id,
                kind=TaskKind.EVALUATE,
                agent=QUALITY_EVALUATOR,
                payload={"target_task_id": producing_id},
            )
        )
        edges.add((producing_id, evaluate_id))

    graph = WorkflowGraph(nodes=frozenset(tasks), edges=frozenset(edges))
    ordered = [tasks[task_id] for task_id in sorted(tasks)]
    return ordered, graph
