"""Run configuration: revision policy, thresholds, lexicon, style rules."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    """Raised when a configuration file is malformed."""


DEFAULT_VISUAL_RULES: dict[str, str] = {
    "3d animation": "3d",
    "watercolor": "watercolor",
    "noir": "noir",
    "pixel art": "pixel",
}

DEFAULT_ACOUSTIC_RULES: dict[str, str] = {
    "battle": "percussive",
    "rain": "ambient",
    "romance": "strings",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs beyond the story text itself.

    ``rig_evaluator`` maps a task id (or the wildcard ``"*"``) to a number of
    forced "revise" verdicts, or the string ``"always"``. It exists for fault
    injection in tests and drills; production configs leave it empty.
    """

    seed: int = 0
    max_revisions: int = 3
    continue_on_degraded: bool = True
    similarity_threshold: float = 0.85
    embedding_dim: int = 64
    seconds_per_shot: int = 3
    character_lexicon: Mapping[str, str] = field(default_factory=dict)
    style_rules: Mapping[str, Mapping[str, str]] = field(
        default_factory=lambda: {
            "visual": dict(DEFAULT_VISUAL_RULES),
            "acoustic": dict(DEFAULT_ACOUSTIC_RULES),
        }
    )
    style_defaults: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: {"visual": ("anime",), "acoustic": ("orchestral",)}
    )
    tool_registry_path: str | None = None
    interactive: bool = False
    review_checkpoints: tuple[str, ...] = ()
    rig_evaluator: Mapping[str, Any] = field(default_factory=dict)

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "max_revisions": self.max_revisions,
            "continue_on_degraded": self.continue_on_degraded,
            "similarity_threshold": self.similarity_threshold,
            "embedding_dim": self.embedding_dim,
            "seconds_per_shot": self.seconds_per_shot,
            "character_lexicon": dict(self.character_lexicon),
            "style_rules": {k: dict(v) for k, v in self.style_rules.items()},
            "style_defaults": {k: list(v) for k, v in self.style_defaults.items()},
            "tool_registry_path": self.tool_registry_path,
            "interactive": self.interactive,
            "review_checkpoints": list(self.review_checkpoints),
            "rig_evaluator": dict(self.rig_evaluator),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {
            "seed",
            "max_revisions",
            "continue_on_degraded",
            "similarity_threshold",
            "embedding_dim",
            "seconds_per_shot",
            "character_lexicon",
            "style_rules",
            "style_defaults",
            "tool_registry_path",
            "interactive",
            "review_checkpoints",
            "rig_evaluator",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

        base = cls()
        kwargs: dict[str, Any] = {}
        for key in known & set(data):
            value = data[key]
            if key == "style_defaults":
                value = {k: tuple(v) for k, v in value.items()}
            elif key == "review_checkpoints":
                value = tuple(value)
            kwargs[key] = value
        config = replace(base, **kwargs)
        if config.max_revisions < 0:
            raise ConfigError("max_revisions must be >= 0")
        if not 0.0 <= config.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must be in [0, 1]")
        if config.embedding_dim < 1:
            raise ConfigError("embedding_dim must be >= 1")
        return config


def load_config(path: str | Path) -> RunConfig:
    """Load a JSON configuration file."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return RunConfig.from_dict(data)
