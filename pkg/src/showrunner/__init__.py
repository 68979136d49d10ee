"""showrunner: a deterministic multi-agent production pipeline.

A story script goes in; a fully assembled production manifest comes out.
A director engine segments the script, plans a dependency graph of tasks,
dispatches them to specialized agents over a JSON message protocol, stores
every output in a versioned asset memory, and routes evaluation verdicts
through a bounded revision loop. All generative backends are deterministic
mock adapters, so runs are reproducible byte for byte.
"""

from .config import RunConfig, load_config
from .director import Director, RunFailure, run_pipeline, run_pipeline_from_text
from .model import FinalManifest, Story, StyleVector
from .segmentation import segment_story

__all__ = [
    "Director",
    "FinalManifest",
    "RunConfig",
    "RunFailure",
    "Story",
    "StyleVector",
    "load_config",
    "run_pipeline",
    "run_pipeline_from_text",
    "segment_story",
]

__version__ = "0.1.0"
