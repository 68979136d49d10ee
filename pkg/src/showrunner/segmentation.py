"""Rule-based script segmentation and style derivation.

Scenes split on blank-line blocks; shots split on sentence boundaries and on
dialogue-marker lines ("Name: ..."). Everything here is deterministic:
identical input text yields an identical Story, character for character.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping

from .model import Scene, Shot, Story, StyleVector, digest

_SENTENCE_RE = re.compile(r"[^.!?]+(?:[.!?]+|\Z)", re.DOTALL)
_WORD_RE = re.compile(r"[A-Za-z0-9']+")

# Explicit spatial language marks a shot as layout-constrained.
SPATIAL_KEYWORDS = frozenset(
    {
        "left",
        "right",
        "center",
        "centre",
        "middle",
        "behind",
        "front",
        "foreground",
        "background",
        "above",
        "below",
        "beside",
        "between",
        "corner",
        "opposite",
        "across",
    }
)

# Discourse markers that open a new action beat inside one description.
_BEAT_MARKERS = frozenset({"while", "as", "then", "meanwhile", "when", "suddenly", "later"})

_SCENE_SETTER_PREFIXES = ("in ", "at ", "on ", "inside ", "within ", "near ", "by ")

MAX_PANELS_PER_SHOT = 4


def _is_speaker_label(label: str, lexicon_names: Iterable[str]) -> bool:
    label = label.strip()
    if not label or len(label) > 50:
        return False
    if label in lexicon_names:
        return True
    tokens = label.split()
    if not 1 <= len(tokens) <= 4:
        return False
    return all(t[0].isupper() or t[0].isdigit() for t in tokens)


def _split_dialogue(line: str, lexicon_names: Iterable[str]) -> tuple[str, str] | None:
    if ":" not in line:
        return None
    label, rest = line.split(":", 1)
    if _is_speaker_label(label, lexicon_names):
        return label.strip(), rest.strip()
    return None


def split_sentences(text: str) -> list[str]:
    """Sentence-level split on terminator punctuation."""
    return [m.group(0).strip() for m in _SENTENCE_RE.finditer(text) if m.group(0).strip()]


def find_characters(text: str, names: Iterable[str]) -> list[str]:
    """Case-insensitive whole-word matches of known character names."""
    found = []
    for name in names:
        if re.search(rf"\b{re.escape(name)}\b", text, flags=re.IGNORECASE):
            found.append(name)
    return sorted(set(found))


def has_spatial_language(text: str) -> bool:
    words = {w.lower() for w in _WORD_RE.findall(text)}
    return bool(words & SPATIAL_KEYWORDS)


def split_into_panels(description: str) -> list[str]:
    """Break one shot description into 1..4 storyboard beats.

    Comma-separated segments merge into the current beat; a discourse marker
    ("while", "then", ...) opens a new beat, and once inside a marked clause
    each gerund segment is its own reaction beat. A leading locative segment
    ("In the ...") is scene context and folds into the first beat.
    """
    segments = [s.strip() for s in description.split(",") if s.strip()]
    if not segments:
        return [description.strip()] if description.strip() else []

    if len(segments) > 1 and segments[0].lower().startswith(_SCENE_SETTER_PREFIXES):
        segments = [segments[0] + ", " + segments[1]] + segments[2:]

    panels: list[list[str]] = []
    in_marked_clause = False
    for segment in segments:
        first_word = (_WORD_RE.findall(segment.lower()) or [""])[0]
        is_marker = first_word in _BEAT_MARKERS
        is_gerund = first_word.endswith("ing") and len(first_word) > 4
        starts_new = bool(panels) and (is_marker or (in_marked_clause and is_gerund))
        if is_marker:
            in_marked_clause = True
        if not panels or (starts_new and len(panels) < MAX_PANELS_PER_SHOT):
            panels.append([segment])
        else:
            panels[-1].append(segment)
    return [", ".join(parts) for parts in panels]


def segment_story(raw_text: str, character_lexicon: Mapping[str, str] | None = None) -> Story:
    """Deterministically decompose a script into scenes and shots.

    Characters are recognized from the configured lexicon plus every speaker
    label appearing anywhere in the script. Empty or whitespace-only input
    yields a story with zero scenes.
    """
    lexicon = dict(character_lexicon or {})
    story_id = "story_" + digest(raw_text)[:12]
    if not raw_text.strip():
        return Story(id=story_id, raw_text=raw_text, scenes=())

    blocks = _blank_line_blocks(raw_text)

    # First pass: collect speaker labels so prose mentions resolve anywhere.
    known_names = set(lexicon)
    for _, lines in blocks:
        for line in lines:
            dialogue = _split_dialogue(line, known_names)
            if dialogue:
                known_names.add(dialogue[0])
    ordered_names = sorted(known_names)

    scenes = []
    for index, (start, lines) in enumerate(blocks):
        scene_id = f"scene_{index + 1:02d}"
        span_start = 0 if index == 0 else start
        span_end = blocks[index + 1][0] if index + 1 < len(blocks) else len(raw_text)
        block_text = "\n".join(lines)
        shots = _build_shots(scene_id, lines, ordered_names)
        scenes.append(
            Scene(
                id=scene_id,
                prompt=block_text.strip(),
                shots=tuple(shots),
                span=(span_start, span_end),
            )
        )
    return Story(id=story_id, raw_text=raw_text, scenes=tuple(scenes))


def _blank_line_blocks(raw_text: str) -> list[tuple[int, list[str]]]:
    """Runs of non-blank lines, each with the offset of its first line."""
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    current_start = 0
    offset = 0
    for line in raw_text.splitlines(keepends=True):
        stripped = line.rstrip("\n").rstrip("\r")
        if stripped.strip():
            if not current:
                current_start = offset
            current.append(stripped)
        else:
            if current:
                blocks.append((current_start, current))
                current = []
        offset += len(line)
    if current:
        blocks.append((current_start, current))
    return blocks


def _build_shots(scene_id: str, lines: list[str], names: list[str]) -> list[Shot]:
    units: list[tuple[str, str | None]] = []  # (text, speaker)
    prose_run: list[str] = []

    def flush_prose() -> None:
        if prose_run:
            for sentence in split_sentences(" ".join(prose_run)):
                units.append((sentence, None))
            prose_run.clear()

    for line in lines:
        dialogue = _split_dialogue(line, names)
        if dialogue:
            flush_prose()
            units.append((line.strip(), dialogue[0]))
        else:
            prose_run.append(line.strip())
    flush_prose()

    shots = []
    for number, (text, speaker) in enumerate(units, start=1):
        characters = set(find_characters(text, names))
        if speaker:
            characters.add(speaker)
        characters_t = tuple(sorted(characters))
        shots.append(
            Shot(
                id=f"{scene_id}_shot_{number:02d}",
                description=text,
                characters=characters_t,
                is_establishing=not characters_t,
                needs_layout=has_spatial_language(text),
                speaker=speaker,
            )
        )
    return shots


def derive_styles(
    story: Story,
    style_rules: Mapping[str, Mapping[str, str]],
    style_defaults: Mapping[str, Iterable[str]],
) -> StyleVector:
    """Keyword-to-tag mapping over the raw script, with configured fallbacks.

    Tags come out lowercase, deduplicated, and sorted; when no rule matches a
    channel, that channel gets its configured defaults.
    """
    text = story.raw_text.lower()

    def channel(name: str) -> tuple[str, ...]:
        tags = {
            tag.lower()
            for keyword, tag in style_rules.get(name, {}).items()
            if keyword.lower() in text
        }
        if not tags:
            tags = {t.lower() for t in style_defaults.get(name, ())}
        return tuple(sorted(tags))

    return StyleVector(visual_style=channel("visual"), acoustic_style=channel("acoustic"))
