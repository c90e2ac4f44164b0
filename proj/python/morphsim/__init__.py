"""Python bindings for the morphsim soft-robot environments."""

import json

from ._core import (
    REPLAY_FORMAT_VERSION,
    ConfigError,
    EngineError,
    Environment,
    StaleReplay,
    __version__,
    action_from_json,
    action_to_json,
    default_config,
    engine_version,
    list_tasks,
    record_actions,
    record_episode,
    replay,
    summary,
    upsample,
)


def read_replay(path):
    """Parse a replay file into (header, steps, summary) dicts."""
    with open(path) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or lines[0].get("type") != "header" or lines[-1].get("type") != "summary":
        raise ValueError(f"{path}: not a replay file")
    return lines[0], lines[1:-1], lines[-1]


__all__ = [
    "REPLAY_FORMAT_VERSION",
    "ConfigError",
    "EngineError",
    "Environment",
    "StaleReplay",
    "__version__",
    "action_from_json",
    "action_to_json",
    "default_config",
    "engine_version",
    "list_tasks",
    "read_replay",
    "record_actions",
    "record_episode",
    "replay",
    "summary",
    "upsample",
]
