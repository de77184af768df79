"""Environment-overridable filesystem locations.

`RUNTIME_ROOT` is where runtime artifacts accumulate (the telemetry log). Both are resolved
at call time, not import time, so tests and operators can redirect them without reloading
the package.
"""

from __future__ import annotations

import os
from pathlib import Path

RUNTIME_ROOT_ENV = "GTR_RUNTIME_ROOT"
TELEMETRY_LOG_ENV = "GTR_TELEMETRY_LOG"
SCHEMA_ROOT = Path(__file__).resolve().parent / "schemas"


def runtime_root() -> Path:
    configured = os.environ.get(RUNTIME_ROOT_ENV)
    if configured:
        return Path(configured).resolve()
    return (Path.home() / ".local" / "state" / "gtrfading").resolve()


def telemetry_log() -> Path:
    configured = os.environ.get(TELEMETRY_LOG_ENV)
    if configured:
        return Path(configured)
    return runtime_root() / "telemetry" / "events.jsonl"


def schema_path(name: str) -> Path:
    return SCHEMA_ROOT / f"{name}.schema.json"
