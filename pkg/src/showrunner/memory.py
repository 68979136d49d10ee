"""Versioned asset memory: append-only tables, single-writer canonical fields,
branching/rollback, and deterministic embedding retrieval.

Storage is an in-memory append-only log, optionally mirrored to one JSONL
file per table; the in-memory index can always be rebuilt from those logs.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .model import TABLE_FIELDS, TABLE_PROMPT_FIELD, AssetRecord, TableName

DEFAULT_EMBEDDING_DIM = 64

_TOKEN_RE = re.compile(r"[0-9a-z]+")


class AssetMemoryError(Exception):
    """Base class for asset-memory failures."""


class SchemaMismatch(AssetMemoryError):
    pass


class WriteDenied(AssetMemoryError):
    pass


class NotFound(AssetMemoryError):
    pass


class BranchExists(AssetMemoryError):
    pass


class UnknownTable(AssetMemoryError):
    pass


@dataclass(frozen=True)
class WritePolicy:
    """Single-writer rule: one agent owns a table's canonical fields."""

    table: TableName
    canonical_fields: frozenset[str]
    owner_agent: str


# Agent names used across the pipeline.
DIRECTOR = "Director"
CHARACTER_DESIGNER = "CharacterDesigner"
SCENE_DESIGNER = "SceneDesigner"
STORYBOARD_AGENT = "StoryboardAgent"
ANIMATOR = "Animator"
AUDIO_PRODUCTION = "AudioProduction"
VIDEO_EDITOR = "VideoEditor"
QUALITY_EVALUATOR = "QualityEvaluator"

# Character voice fields belong to audio production; everything else in the
# character table belongs to the character designer.
DEFAULT_POLICIES: tuple[WritePolicy, ...] = (
    WritePolicy(TableName.SHOT, frozenset({"description"}), DIRECTOR),
    WritePolicy(TableName.SCENE, frozenset({"prompt", "view_3d"}), SCENE_DESIGNER),
    WritePolicy(TableName.CHARACTER, frozenset({"prompt", "3d_view"}), CHARACTER_DESIGNER),
    WritePolicy(TableName.CHARACTER, frozenset({"demo_voice", "voice_prompt"}), AUDIO_PRODUCTION),
    WritePolicy(TableName.STYLE, frozenset({"visual_style", "acoustic_style"}), DIRECTOR),
    WritePolicy(TableName.STORYBOARD, frozenset({"prompt", "image_path"}), STORYBOARD_AGENT),
    WritePolicy(TableName.VIDEO, frozenset({"prompt", "video_path", "shot_id", "music_id"}), ANIMATOR),
    WritePolicy(TableName.MUSIC, frozenset({"character_id", "prompt", "music_path"}), AUDIO_PRODUCTION),
)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics."""
    return _TOKEN_RE.findall(text.lower())


def _bucket(token: str, dim: int) -> int:
    h = hashlib.sha256(token.encode("utf-8")).hexdigest()
    return int(h, 16) % dim


def embed(text: str, dim: int = DEFAULT_EMBEDDING_DIM) -> tuple[float, ...]:
    """Feature-hashing embedding: token counts hashed into ``dim`` buckets,
    L2-normalized. Empty text maps to the all-zero vector."""
    counts = [0.0] * dim
    for token in tokenize(text):
        counts[_bucket(token, dim)] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return tuple(counts)
    return tuple(c / norm for c in counts)


def cosine(a: Iterable[float], b: Iterable[float]) -> float:
    """Cosine similarity; by convention 0 when either vector is zero."""
    va, vb = list(a), list(b)
    dot = sum(x * y for x, y in zip(va, vb))
    na = math.sqrt(sum(x * x for x in va))
    nb = math.sqrt(sum(y * y for y in vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def _validate_policies(policies: Iterable[WritePolicy]) -> dict[tuple[TableName, str], str]:
    owners: dict[tuple[TableName, str], str] = {}
    for policy in policies:
        for fld in policy.canonical_fields:
            key = (policy.table, fld)
            if key in owners and owners[key] != policy.owner_agent:
                raise ValueError(
                    f"field '{fld}' of table '{policy.table.value}' has two owners: "
                    f"{owners[key]} and {policy.owner_agent}"
                )
            owners[key] = policy.owner_agent
    return owners


class AssetStore:
    """Queryable, versioned asset tables with single-writer enforcement."""

    def __init__(
        self,
        policies: Iterable[WritePolicy] = DEFAULT_POLICIES,
        embedding_dim: int = DEFAULT_EMBEDDING_DIM,
        persist_dir: str | Path | None = None,
    ) -> None:
        self._owners = _validate_policies(policies)
        self._dim = embedding_dim
        # (table, id, branch) -> list of AssetRecord, index == version - 1
        self._versions: dict[tuple[TableName, str, str], list[AssetRecord]] = {}
        self._log: list[AssetRecord] = []
        self._persist_dir = Path(persist_dir) if persist_dir is not None else None
        self._write_hook: Callable[[AssetRecord], None] | None = None
        if self._persist_dir is not None:
            self._persist_dir.mkdir(parents=True, exist_ok=True)

    # -- write path -----------------------------------------------------

    def put(self, record: AssetRecord, producer: str) -> int:
        """Append a new version; returns the assigned version number.

        A canonical field counts as "written" when its value differs from the
        previous version (or is non-null on the first write); writing such a
        field requires the producer to be its owner.
        """
        expected = TABLE_FIELDS[record.table]
        actual = tuple(sorted(record.key_fields))
        if actual != tuple(sorted(expected)):
            raise SchemaMismatch(
                f"table '{record.table.value}' expects fields {sorted(expected)}, "
                f"got {sorted(actual)}"
            )

        key = (record.table, record.record_id, record.branch)
        history = self._versions.get(key, [])
        previous = history[-1].key_fields if history else {f: None for f in expected}
        written = {
            f for f in expected if record.key_fields.get(f) != previous.get(f)
        }
        for fld in sorted(written):
            owner = self._owners.get((record.table, fld))
            if owner is not None and producer != owner:
                raise WriteDenied(
                    f"agent '{producer}' may not write canonical field '{fld}' "
                    f"of table '{record.table.value}' (owner: {owner})"
                )

        stored = replace(record, version=len(history) + 1, producer=producer)
        self._append(key, stored)
        return stored.version

    def _append(self, key: tuple[TableName, str, str], stored: AssetRecord) -> None:
        self._versions.setdefault(key, []).append(stored)
        self._log.append(stored)
        if self._persist_dir is not None:
            path = self._persist_dir / f"{stored.table.value}.jsonl"
            with path.open("a", encoding="utf-8") as fh:
                fh.write(_record_line(stored) + "\n")
        if self._write_hook is not None:
            self._write_hook(stored)

    # -- read path ------------------------------------------------------

    def get(
        self,
        table: TableName,
        record_id: str,
        branch: str = "main",
        version: int | None = None,
    ) -> AssetRecord:
        history = self._versions.get((table, record_id, branch))
        if not history:
            raise NotFound(f"{table.value}/{record_id}@{branch}")
        if version is None:
            return history[-1]
        if not 1 <= version <= len(history):
            raise NotFound(f"{table.value}/{record_id}@{branch} version {version}")
        return history[version - 1]

    def exists(self, table: TableName, record_id: str, branch: str = "main") -> bool:
        return bool(self._versions.get((table, record_id, branch)))

    def history(self, table: TableName, record_id: str, branch: str = "main") -> list[AssetRecord]:
        return list(self._versions.get((table, record_id, branch), []))

    def latest_records(self, table: TableName, branch: str = "main") -> list[AssetRecord]:
        """Latest version of every record in a table on one branch, id order."""
        out = [
            history[-1]
            for (tbl, _, br), history in self._versions.items()
            if tbl == table and br == branch and history
        ]
        return sorted(out, key=lambda r: r.record_id)

    def all_records(self) -> list[AssetRecord]:
        """Every stored version, in write order (full-scan audits)."""
        return list(self._log)

    def owner_of(self, table: TableName, fld: str) -> str | None:
        return self._owners.get((table, fld))

    # -- versioning -----------------------------------------------------

    def rollback(self, table: TableName, record_id: str, branch: str, to_version: int) -> int:
        """Append a new version whose content equals ``to_version``'s content."""
        target = self.get(table, record_id, branch, to_version)
        history = self._versions[(table, record_id, branch)]
        stored = replace(target, version=len(history) + 1)
        self._append((table, record_id, branch), stored)
        return stored.version

    def branch(
        self,
        table: TableName,
        record_id: str,
        from_branch: str,
        at_version: int,
        new_branch: str,
    ) -> AssetRecord:
        """Fork a record: the new branch starts at version 1 with the source content."""
        source = self.get(table, record_id, from_branch, at_version)
        key = (table, record_id, new_branch)
        if self._versions.get(key):
            raise BranchExists(f"{table.value}/{record_id}@{new_branch}")
        stored = replace(source, version=1, branch=new_branch)
        self._append(key, stored)
        return stored

    # -- retrieval ------------------------------------------------------

    def embed_text(self, text: str) -> tuple[float, ...]:
        return embed(text, self._dim)

    def query_similar(self, table: TableName, query_text: str, k: int) -> list[AssetRecord]:
        """Top-k latest records by cosine similarity of the prompt-ish field.

        Ties break by record id ascending; fewer than k results when the
        table is smaller.
        """
        if not isinstance(table, TableName):
            raise UnknownTable(str(table))
        if k < 1:
            raise ValueError("k must be >= 1")
        query_vec = self.embed_text(query_text)
        scored = []
        for record in self.latest_records(table):
            text = _prompt_text(record)
            score = cosine(query_vec, self.embed_text(text))
            scored.append((-score, record.record_id, record))
        scored.sort(key=lambda item: (item[0], item[1]))
        return [record for _, _, record in scored[:k]]

    # -- persistence ----------------------------------------------------

    def set_write_hook(self, hook: Callable[[AssetRecord], None] | None) -> None:
        self._write_hook = hook

    @classmethod
    def replay(
        cls,
        persist_dir: str | Path,
        policies: Iterable[WritePolicy] = DEFAULT_POLICIES,
        embedding_dim: int = DEFAULT_EMBEDDING_DIM,
    ) -> "AssetStore":
        """Rebuild a store's index purely from its JSONL logs."""
        store = cls(policies=policies, embedding_dim=embedding_dim)
        records = []
        for path in sorted(Path(persist_dir).glob("*.jsonl")):
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    records.append(AssetRecord.from_dict(_parse_line(line)))
        # Write order is global; JSONL files are per-table, so re-sort by the
        # order they were appended (version within key is enough to rebuild).
        for record in records:
            key = (record.table, record.record_id, record.branch)
            store._versions.setdefault(key, []).append(record)
        for history in store._versions.values():
            history.sort(key=lambda r: r.version)
        store._log = sorted(records, key=lambda r: (r.table.value, r.record_id, r.branch, r.version))
        return store


def _prompt_text(record: AssetRecord) -> str:
    fld = TABLE_PROMPT_FIELD[record.table]
    value = record.key_fields.get(fld)
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return str(value) if value is not None else ""


def _record_line(record: AssetRecord) -> str:
    from .model import canonical_json

    return canonical_json(record.to_dict())


def _parse_line(line: str) -> Mapping[str, Any]:
    import json

    return json.loads(line)
