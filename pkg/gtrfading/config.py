"""Run configuration outside the command line: the default seed and `--config` files.

A config file is flat `key = value` text. Keys are flag names with or without leading
dashes; `-` and `_` are interchangeable. `#` starts a comment. Values are parsed exactly
as the same flag would be on the command line, and flags given on the command line win.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import DomainError

SEED_ENV = "GTR_SEED"
DEFAULT_SEED = 20150101
SEED_LIMIT = 2**64

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def parse_seed(text: str | int) -> int:
    try:
        seed = int(text)
    except (TypeError, ValueError) as e:
        raise DomainError("seed_range", f"seed {text!r} is not an integer") from e
    if not 0 <= seed < SEED_LIMIT:
        raise DomainError("seed_range", f"seed {seed} is outside [0, 2^64)")
    return seed


def default_seed() -> int:
    """`GTR_SEED` if set, otherwise the fixed library default."""
    configured = os.environ.get(SEED_ENV)
    if configured is None or not configured.strip():
        return DEFAULT_SEED
    return parse_seed(configured.strip())


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise DomainError("config_value", f"{text!r} is not a boolean (true/false/yes/no/1/0)")


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def load_config(path: Path | str) -> dict[str, str]:
    """Read a flat key-value file. Later duplicates override earlier ones."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise DomainError("config_file", f"cannot read {p}: {e.strerror or e}") from e
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError("config_syntax", f"{p}:{lineno}: expected `key = value`, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key:
            raise DomainError("config_syntax", f"{p}:{lineno}: empty key")
        entries[key] = value.strip()
    return entries
