"""Result files: CSV tables, schema-checked JSON documents, run manifests.

CSV is plain: a header row, comma separated, LF line endings, floats written with 17
significant digits so they read back bit-exact. A CSV written to a file gets a
`<file>.manifest.json` sidecar. JSON documents embed their manifest instead.

Every JSON document is validated against its schema in `gtrfading/schemas/` before it
is written. A document that fails is a bug in this package, not bad input, so the
error is a plain `GtrError` (exit 1).
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from functools import cache
from pathlib import Path
from typing import Any

import numpy as np
import scipy
from jsonschema import Draft202012Validator, ValidationError
from referencing import Registry, Resource
from referencing.jsonschema import DRAFT202012

from . import __version__
from .errors import GtrError
from .paths import SCHEMA_ROOT, schema_path
from .serialize import digest, hash_bytes, to_disk
from .telemetry import now_iso_and_epoch_ms

TOOL = "gtrfading"
SCHEMA_VERSION = "1.0.0"


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict[str, Any]
    seed: int | None
    started_at: str
    finished_at: str = ""
    output_digest: str = ""
    tool: str = TOOL
    version: str = __version__
    libraries: dict[str, str] = field(default_factory=lambda: {"numpy": np.__version__, "scipy": scipy.__version__})

    @classmethod
    def start(cls, command: str, parameters: dict[str, Any], seed: int | None = None) -> RunManifest:
        ts, _ = now_iso_and_epoch_ms()
        return cls(command=command, parameters=parameters, seed=seed, started_at=ts)

    def finish(self, output_digest: str) -> RunManifest:
        ts, _ = now_iso_and_epoch_ms()
        return replace(self, finished_at=ts, output_digest=output_digest)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@cache
def _registry() -> Registry:
    """Every shipped schema under its `$id`, so `$ref`s resolve offline."""
    resources = []
    for path in sorted(SCHEMA_ROOT.glob("*.schema.json")):
        schema = json.loads(path.read_text(encoding="utf-8"))
        resources.append((schema["$id"], Resource.from_contents(schema, default_specification=DRAFT202012)))
    return Registry().with_resources(resources)


@cache
def _validator(name: str) -> Draft202012Validator:
    schema = json.loads(schema_path(name).read_text(encoding="utf-8"))
    return Draft202012Validator(schema, registry=_registry(), format_checker=Draft202012Validator.FORMAT_CHECKER)


def validate(document: dict[str, Any], schema: str) -> None:
    try:
        _validator(schema).validate(document)
    except ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise GtrError("output_contract", f"{schema} schema violation at {where}: {e.message}") from e


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(columns: list[str], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def table_document(
    command: str, columns: list[str], rows: list[dict[str, Any]], manifest: RunManifest
) -> dict[str, Any]:
    """Table JSON: the digest covers columns and rows, never the manifest."""
    payload = {"columns": columns, "rows": rows}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        **payload,
        "manifest": manifest.finish(digest(payload)).to_json(),
    }
    validate(doc, "table")
    return doc


def report_document(kind: str, result: dict[str, Any], manifest: RunManifest) -> dict[str, Any]:
    """Monte Carlo report. `digest` covers `kind` and `result` only."""
    payload = {"kind": kind, "result": result}
    result_digest = digest(payload)
    doc = {
        "schema_version": SCHEMA_VERSION,
        **payload,
        "digest": result_digest,
        "manifest": manifest.finish(result_digest).to_json(),
    }
    validate(doc, "mc-report")
    return doc


def emit_text(text: str, out: Path | None) -> str:
    """Write to `out`, or stdout when none. Returns the telemetry ref."""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return "-"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="")
    return str(out)


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def write_csv(columns: list[str], rows: list[dict[str, Any]], manifest: RunManifest, out: Path | None) -> str:
    text = render_csv(columns, rows)
    ref = emit_text(text, out)
    if out is not None:
        write_manifest(manifest.finish(hash_bytes(text.encode("utf-8"))), sidecar_path(out))
    return ref


def write_manifest(manifest: RunManifest, path: Path) -> None:
    doc = manifest.to_json()
    validate(doc, "manifest")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_disk(doc), encoding="utf-8")


def write_json(doc: dict[str, Any], out: Path | None) -> str:
    return emit_text(to_disk(doc), out)
