"""Canonical JSON and content digests.

- `canonical(obj)` is the comparison and digest form: sorted keys, no insignificant
  whitespace, non-finite numbers refused.
- `to_disk(obj)` is the storage form: indented, trailing newline.

A report digest is taken over the canonical form of its result payload only. Timestamps
live in the manifest and never enter the digest, so two runs with the same seed agree.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def to_disk(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def digest(obj: Any) -> str:
    """`sha256:<hex>` over the canonical form of a JSON value."""
    return hash_bytes(canonical(obj).encode("utf-8"))


def hash_bytes(data: bytes) -> str:
    return f"sha256:{hashlib.sha256(data).hexdigest()}"


def hash_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return f"sha256:{h.hexdigest()}"
