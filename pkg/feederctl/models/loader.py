"""Load JSON configuration files into validated models with precise diagnostics."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from ..exceptions import ConfigurationError

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def parse_override(text: str) -> Tuple[str, Any]:
    """
    Parse a `dotted.key=value` override.

    Values are read as JSON when possible (numbers, booleans, lists, objects)
    and kept as plain strings otherwise.
    """
    if "=" not in text:
        raise ConfigurationError(f"Override must look like key=value, got '{text}'")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"Override has an empty key: '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> List[Tuple[str, Any]]:
    """Apply overrides in place; returns the parsed (key, value) pairs."""
    applied = []
    for text in overrides:
        key, value = parse_override(text)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = {}
                node[part] = child
            elif not isinstance(child, dict):
                raise ConfigurationError("Cannot override inside non-object value", key=key)
            node = child
        node[parts[-1]] = value
        applied.append((key, value))
        logger.info(f"Override applied: {key}={value!r}")
    return applied


def _line_of_key(text: str, loc: Sequence[Any]) -> Optional[int]:
    """Best-effort line number of a pydantic error location inside raw JSON text."""
    position = 0
    line = None
    pending_index = 0
    for part in loc:
        if isinstance(part, int):
            pending_index = part
            continue
        needle = f'"{part}"'
        found = text.find(needle, position)
        # Skip to the n-th occurrence when the previous element was a list index
        for _ in range(pending_index):
            if found < 0:
                break
            found = text.find(needle, found + 1)
        pending_index = 0
        if found < 0:
            break
        position = found
        line = text.count("\n", 0, found) + 1
    return line


def _format_loc(loc: Sequence[Any]) -> str:
    return ".".join(str(part) for part in loc)


def read_json(path: Path) -> Tuple[Dict[str, Any], str]:
    """Read a JSON object from disk."""
    if not path.exists():
        raise ConfigurationError("file not found", file=str(path))
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON: {e.msg}", file=str(path), line=e.lineno) from e
    if not isinstance(data, dict):
        raise ConfigurationError("top-level value must be an object", file=str(path), line=1)
    return data, text


def validate_data(
    data: Dict[str, Any],
    model: Type[ModelT],
    path: Path,
    text: str = "",
) -> ModelT:
    """Validate a raw dict, mapping pydantic errors to ConfigurationError."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first.get("loc", ())
        raise ConfigurationError(
            first.get("msg", "invalid value"),
            file=str(path),
            line=_line_of_key(text, loc) if text else None,
            key=_format_loc(loc) or None,
        ) from e

