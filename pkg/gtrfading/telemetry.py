"""Typed run events, append-only JSONL.

Every CLI command emits exactly one event when it finishes, success or not. A silent run
is indistinguishable from one that never happened, so failure paths emit too.

Event shape:

    {
      "ts": "2026-10-19T06:57:00Z",
      "timestamp": 1792392000000,        # epoch ms
      "layer": "cli",                    # cli|mcsim|figures
      "source": "sep",                   # subcommand
      "eventType": "success",            # success|failure|nonconverged
      "reason": "41 rows",
      "ref": "out/qam.csv",              # produced artifact, or "-" for stdout
      "sourceType": "user"               # user|system|smoke
    }

Telemetry is off the hot path. A failed append never fails the caller: it is surfaced
once on stderr and the returned event carries a private `_telemetry_delivery` receipt.
The numeric modules never emit; only the command layer does.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from .paths import telemetry_log

Layer = Literal["cli", "mcsim", "figures"]
EventType = Literal["success", "failure", "nonconverged"]
SourceType = Literal["user", "system", "smoke"]

SOURCE_TYPE_ENV = "GTR_SOURCE_TYPE"


def _append_jsonl(path: Path, record: dict) -> None:
    """Append one complete JSON line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = (json.dumps(record, ensure_ascii=False) + "\n").encode("utf-8")
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o600)
    try:
        view = memoryview(payload)
        while view:
            written = os.write(fd, view)
            if written == 0:
                raise OSError("zero-byte append while telemetry payload remained")
            view = view[written:]
    finally:
        os.close(fd)


def _surface_write_failure(message: str) -> None:
    try:
        sys.stderr.write(f"gtrfading telemetry: {message}\n")
        sys.stderr.flush()
    except Exception:  # noqa: BLE001 - a broken stderr cannot enter the hot path
        pass


def now_iso_and_epoch_ms() -> tuple[str, int]:
    now = datetime.now(timezone.utc)
    return (
        now.isoformat(timespec="seconds").replace("+00:00", "Z"),
        int(now.timestamp() * 1000),
    )


def _default_source_type() -> SourceType:
    declared = os.environ.get(SOURCE_TYPE_ENV)
    if declared in {"user", "system", "smoke"}:
        return declared  # type: ignore[return-value]
    return "user"


def emit(
    *,
    layer: Layer,
    source: str,
    eventType: EventType,
    reason: str,
    ref: str = "-",
    sourceType: SourceType | None = None,
    extra: dict | None = None,
) -> dict:
    ts_iso, ts_ms = now_iso_and_epoch_ms()
    event = {
        "ts": ts_iso,
        "timestamp": ts_ms,
        "layer": layer,
        "source": source,
        "eventType": eventType,
        "reason": reason,
        "ref": ref or "-",
        "sourceType": sourceType or _default_source_type(),
    }
    if extra:
        event.update(extra)
    destination = telemetry_log()
    try:
        _append_jsonl(destination, event)
        return event
    except Exception as error:  # noqa: BLE001 - telemetry must not block a finished run
        receipt = {
            "status": "undelivered",
            "primary_path": str(destination),
            "primary_error": {"type": type(error).__name__, "message": str(error)},
        }
        _surface_write_failure(f"append to {destination} failed ({type(error).__name__}: {error})")
        return {**event, "_telemetry_delivery": receipt}


def emit_success(layer: Layer, source: str, reason: str, ref: str = "-", extra: dict | None = None) -> dict:
    return emit(layer=layer, source=source, eventType="success", reason=reason, ref=ref, extra=extra)


def emit_failure(layer: Layer, source: str, reason: str, ref: str = "-", extra: dict | None = None) -> dict:
    return emit(layer=layer, source=source, eventType="failure", reason=reason, ref=ref, extra=extra)


def emit_nonconverged(layer: Layer, source: str, reason: str, ref: str = "-", extra: dict | None = None) -> dict:
    return emit(layer=layer, source=source, eventType="nonconverged", reason=reason, ref=ref, extra=extra)
