"""Render-time values: plain data plus trademarked safe content.

A value is one of: str, bool, int, float, list, dict, None, or SafeContent.
Ordinary ingestion (JSON bindings) produces plain data; SafeContent is only
produced by a machine's collected() output or built explicitly by code that
vouches for the text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class EscapeError(Exception):
    """A value cannot be converted to text in the requested context."""


@dataclass(frozen=True)
class SafeContent:
    """Text attested to be safe for a named content language."""

    language: str
    text: str


def stringify(value) -> str:
    """Text form of a scalar value.

    Numbers use their shortest round-trip decimal form; booleans are
    ``true``/``false``. Lists, records, and null have no unambiguous text
    form and are rejected.
    """
    if isinstance(value, SafeContent):
        return value.text
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value) if isinstance(value, float) else str(value)
    if isinstance(value, str):
        return value
    if value is None:
        raise EscapeError("cannot render null as text")
    raise EscapeError(f"cannot render a {type(value).__name__} as text")


def truthy(value) -> bool:
    """Condition semantics: false, empty string, 0, empty list, and absent
    (None) are false; everything else, including SafeContent, is true."""
    if value is None or value is False:
        return False
    if isinstance(value, SafeContent):
        return True
    if isinstance(value, (str, list)):
        return len(value) > 0
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value != 0
    return True


def _decode(obj):
    if isinstance(obj, dict):
        if set(obj.keys()) == {"$safe", "content"}:
            return SafeContent(str(obj["$safe"]), str(obj["content"]))
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def bindings_from_json(text: str) -> dict:
    """Parse a bindings document.

    The object form ``{"$safe": "html", "content": "..."}`` constructs
    SafeContent and is trusted input by definition.
    """
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("bindings document must be a JSON object")
    return _decode(obj)
