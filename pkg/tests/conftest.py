from __future__ import annotations

import pytest

from showrunner.agents import AgentContext, AssetVault, CharacterDesignExecutor
from showrunner.config import RunConfig
from showrunner.memory import AssetStore
from showrunner.protocol import request_envelope
from showrunner.registry import ToolInvoker, default_registry

YX01_DESCRIPTION = (
    "In Ye's training room, Ye raises a blue-and-white porcelain cup with both hands, "
    "tilting his head to bring it to his mouth, while the system AI angrily try to stop him, "
    "telling him to stop."
)

LEXICON = {
    "Ye": "Ye, a young cultivator in a blue-and-white robe",
    "System AI": "a floating holographic assistant",
}


@pytest.fixture
def yx01_description() -> str:
    return YX01_DESCRIPTION


@pytest.fixture
def lexicon() -> dict[str, str]:
    return dict(LEXICON)


@pytest.fixture
def base_config(lexicon) -> RunConfig:
    return RunConfig(character_lexicon=lexicon)


@pytest.fixture
def agent_ctx(base_config) -> AgentContext:
    registry = default_registry()
    return AgentContext(
        store=AssetStore(),
        vault=AssetVault(),
        registry=registry,
        invoker=ToolInvoker(registry),
        config=base_config,
        seed=0,
    )


def design_character(ctx: AgentContext, name: str, prompt: str, style=("anime",)) -> dict:
    """Run the character designer so downstream agents find the stored rows."""
    executor = CharacterDesignExecutor()
    from showrunner.planning import slugify

    character_id = f"char_{slugify(name)}"
    request = request_envelope(
        f"{character_id}_v1",
        "character_design",
        prompt,
        "style: test",
        executor.name,
        payload={
            "character": name,
            "character_id": character_id,
            "prompt": prompt,
            "visual_style": list(style),
        },
    )
    response = executor.execute(request, ctx)
    return dict(response.outputs)


@pytest.fixture
def seeded_characters(agent_ctx, lexicon):
    outputs = {}
    for name, prompt in lexicon.items():
        outputs[name] = design_character(agent_ctx, name, prompt)
    return outputs
