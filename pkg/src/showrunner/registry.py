"""Tool registry: capability metadata per agent, the deterministic selection
policy, and the adapter layer that turns a tool invocation into a descriptor.

Adapters are pluggable per registry entry: the built-in mock hashes its
parameters into a content digest; "command" and "http" adapters delegate to
an external process or endpoint with the same contract, so real generative
backends can replace mocks without touching any agent code.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .model import Capability, ToolDescriptor, canonical_json, digest


class RegistryError(Exception):
    pass


class DuplicateTool(RegistryError):
    pass


class NoTools(RegistryError):
    pass


class AdapterError(RegistryError):
    pass


@dataclass(frozen=True)
class TaskRequirements:
    """What a generation task needs from a tool."""

    needs_identity: bool = False
    needs_spatial: bool = False
    is_establishing: bool = False
    style_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.is_establishing and self.needs_identity:
            raise ValueError("an establishing shot cannot require identity consistency")

    def required_capabilities(self) -> frozenset[Capability]:
        flags = set()
        if self.needs_identity:
            flags.add(Capability.IDENTITY_CONSISTENCY)
        if self.needs_spatial:
            flags.add(Capability.SPATIAL_CONTROL)
        if self.is_establishing:
            flags.add(Capability.EMPTY_SCENE)
        return frozenset(flags)


@dataclass(frozen=True)
class SelectionCandidate:
    """One tool's standing against a requirement set."""

    descriptor: ToolDescriptor
    matched: tuple[str, ...]
    unmatched: tuple[str, ...]

    @property
    def covers_all(self) -> bool:
        return not self.unmatched


@dataclass(frozen=True)
class AdapterSpec:
    """How a tool is actually invoked: built-in mock, subprocess, or HTTP."""

    kind: str = "mock"
    command: tuple[str, ...] = ()
    url: str | None = None


@dataclass(frozen=True)
class RegistryEntry:
    agent: str
    descriptor: ToolDescriptor
    adapter: AdapterSpec = field(default_factory=AdapterSpec)


class ToolRegistry:
    """Per-agent tool listings; write-once at startup, read-only during runs."""

    def __init__(self) -> None:
        self._tools: dict[str, dict[str, RegistryEntry]] = {}

    def register_tool(
        self,
        agent: str,
        descriptor: ToolDescriptor,
        adapter: AdapterSpec | None = None,
    ) -> None:
        violations = descriptor.validate()
        if violations:
            raise RegistryError("; ".join(violations))
        agent_tools = self._tools.setdefault(agent, {})
        if descriptor.name in agent_tools:
            raise DuplicateTool(f"tool '{descriptor.name}' already registered for '{agent}'")
        agent_tools[descriptor.name] = RegistryEntry(
            agent=agent, descriptor=descriptor, adapter=adapter or AdapterSpec()
        )

    def agents(self) -> list[str]:
        return sorted(self._tools)

    def tools_for(self, agent: str) -> list[ToolDescriptor]:
        return [
            entry.descriptor
            for _, entry in sorted(self._tools.get(agent, {}).items())
        ]

    def entry(self, agent: str, tool_name: str) -> RegistryEntry:
        try:
            return self._tools[agent][tool_name]
        except KeyError:
            raise NoTools(f"tool '{tool_name}' is not registered for '{agent}'") from None

    def has_tool(self, agent: str, tool_name: str) -> bool:
        return tool_name in self._tools.get(agent, {})

    def explain_selection(
        self, agent: str, requirements: TaskRequirements
    ) -> list[SelectionCandidate]:
        """Every registered tool ranked by the selection policy.

        Full-coverage candidates come first (cheapest cost_rank, then name);
        partial candidates follow, ordered by how many required flags they
        cover, then cost_rank, then name.
        """
        tools = self.tools_for(agent)
        if not tools:
            raise NoTools(f"agent '{agent}' has no registered tools")
        required = requirements.required_capabilities()
        candidates = []
        for tool in tools:
            matched = sorted(c.value for c in required & tool.capabilities)
            unmatched = sorted(c.value for c in required - tool.capabilities)
            candidates.append(
                SelectionCandidate(tool, tuple(matched), tuple(unmatched))
            )
        candidates.sort(
            key=lambda c: (
                0 if c.covers_all else 1,
                -len(c.matched),
                c.descriptor.cost_rank,
                c.descriptor.name,
            )
        )
        return candidates

    def select_tool(self, agent: str, requirements: TaskRequirements) -> ToolDescriptor:
        """Cheapest tool covering all required flags, or the best partial cover."""
        return self.explain_selection(agent, requirements)[0].descriptor


class ToolInvoker:
    """Dispatches a tool invocation to its adapter.

    Contract either way: the adapter receives ``{tool, parameters, seed}`` and
    returns ``{descriptor, content_digest}``.
    """

    def __init__(self, registry: ToolRegistry) -> None:
        self._registry = registry

    def invoke(
        self, agent: str, tool_name: str, parameters: Mapping[str, Any], seed: int
    ) -> dict[str, Any]:
        entry = self._registry.entry(agent, tool_name)
        request = {"tool": tool_name, "parameters": dict(parameters), "seed": seed}
        if entry.adapter.kind == "mock":
            return mock_adapter(request)
        if entry.adapter.kind == "command":
            return _command_adapter(entry.adapter, request)
        if entry.adapter.kind == "http":
            return _http_adapter(entry.adapter, request)
        raise AdapterError(f"unknown adapter kind '{entry.adapter.kind}'")


def mock_adapter(request: Mapping[str, Any]) -> dict[str, Any]:
    """Deterministic stand-in for a generative backend: the descriptor is the
    generation parameters themselves, digested canonically."""
    descriptor = {
        "tool": request["tool"],
        "seed": request["seed"],
        **dict(request["parameters"]),
    }
    return {"descriptor": descriptor, "content_digest": digest(descriptor)}


def _command_adapter(spec: AdapterSpec, request: Mapping[str, Any]) -> dict[str, Any]:
    if not spec.command:
        raise AdapterError("command adapter requires a command")
    proc = subprocess.run(
        list(spec.command),
        input=canonical_json(request),
        capture_output=True,
        text=True,
        check=False,
    )
    if proc.returncode != 0:
        raise AdapterError(f"adapter command failed ({proc.returncode}): {proc.stderr.strip()}")
    try:
        result = json.loads(proc.stdout)
    except json.JSONDecodeError as exc:
        raise AdapterError(f"adapter command returned invalid JSON: {exc}") from exc
    return _check_adapter_result(result)


def _http_adapter(spec: AdapterSpec, request: Mapping[str, Any]) -> dict[str, Any]:
    if not spec.url:
        raise AdapterError("http adapter requires a url")
    import httpx

    response = httpx.post(spec.url, json=dict(request), timeout=30.0)
    if response.status_code != 200:
        raise AdapterError(f"adapter endpoint returned {response.status_code}")
    return _check_adapter_result(response.json())


def _check_adapter_result(result: Any) -> dict[str, Any]:
    if (
        not isinstance(result, dict)
        or "descriptor" not in result
        or "content_digest" not in result
    ):
        raise AdapterError("adapter result must carry 'descriptor' and 'content_digest'")
    return result


def load_registry_file(path: str | Path) -> ToolRegistry:
    """Load a registry from its JSON file: a list of tool entries."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return _registry_from_entries(data)


def default_registry() -> ToolRegistry:
    """The registry shipped with the package."""
    raw = resources.files("showrunner.data").joinpath("default_registry.json").read_text("utf-8")
    return _registry_from_entries(json.loads(raw))


def _registry_from_entries(entries: Any) -> ToolRegistry:
    if not isinstance(entries, list):
        raise RegistryError("registry file must contain a JSON list")
    registry = ToolRegistry()
    for item in entries:
        descriptor = ToolDescriptor.from_dict(item)
        adapter_raw = item.get("adapter", {})
        adapter = AdapterSpec(
            kind=adapter_raw.get("kind", "mock"),
            command=tuple(adapter_raw.get("command", ())),
            url=adapter_raw.get("url"),
        )
        registry.register_tool(item["agent"], descriptor, adapter)
    return registry
