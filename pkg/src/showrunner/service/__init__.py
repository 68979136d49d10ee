from .app import app, create_app
from .manager import RunHandle, RunManager

__all__ = ["app", "create_app", "RunHandle", "RunManager"]
