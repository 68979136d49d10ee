"""Run lifecycle management for the HTTP service: each run is one Director
executing on a background thread."""

from __future__ import annotations

import threading
from typing import Any, Mapping

from ..config import RunConfig
from ..director import Director, RunFailure, StartupError
from ..planning import PlanningError


class RunManager:
    """Holds every live run; submission is idempotent on (story, config)."""

    def __init__(self) -> None:
        self._runs: dict[str, RunHandle] = {}
        self._lock = threading.Lock()

    def create_run(
        self,
        story_text: str,
        config_data: Mapping[str, Any],
        seed: int | None = None,
        interactive: bool = False,
    ) -> tuple["RunHandle", bool]:
        config = RunConfig.from_dict(dict(config_data))
        overrides: dict[str, Any] = {"interactive": interactive}
        if seed is not None:
            overrides["seed"] = seed
        config = config.with_overrides(**overrides)

        director = Director(config)
        director.prepare(story_text=story_text)
        with self._lock:
            existing = self._runs.get(director.run_id)
            if existing is not None:
                return existing, True
            handle = RunHandle(director)
            self._runs[director.run_id] = handle
        handle.start()
        return handle, False

    def register(self, director: Director) -> "RunHandle":
        """Adopt an externally prepared run (used by the interactive CLI)."""
        with self._lock:
            handle = RunHandle(director)
            self._runs[director.run_id] = handle
            return handle

    def get(self, run_id: str) -> "RunHandle | None":
        with self._lock:
            return self._runs.get(run_id)

    def all_runs(self) -> list["RunHandle"]:
        with self._lock:
            return list(self._runs.values())


class RunHandle:
    """One run plus its executor thread."""

    def __init__(self, director: Director) -> None:
        self.director = director
        self._thread: threading.Thread | None = None

    @property
    def run_id(self) -> str:
        return self.director.run_id

    def start(self) -> None:
        if self._thread is not None:
            return

        def _target() -> None:
            try:
                self.director.execute()
            except (RunFailure, StartupError, PlanningError):
                pass  # failure is recorded in the event log / run status

        self._thread = threading.Thread(target=_target, daemon=True, name=f"run-{self.run_id}")
        self._thread.start()

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout=timeout)
