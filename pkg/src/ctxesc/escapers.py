"""The escaper registry: pure transforms applied to untrusted values.

Escaper names are the vocabulary shared by table escaper maps and compiled
plans, so renaming one is a wire-format change.
"""

from __future__ import annotations

import json
import re
import urllib.parse
from dataclasses import dataclass, field
from typing import Callable

from .values import EscapeError, SafeContent, stringify

_PCDATA_MAP = {ord("&"): "&amp;", ord("<"): "&lt;", ord(">"): "&gt;"}
_ATTR_MAP = dict(_PCDATA_MAP)
_ATTR_MAP[ord('"')] = "&quot;"
_ATTR_MAP[ord("'")] = "&#39;"

# RFC 3986 reserved and unreserved characters survive URL filtering; anything
# else (spaces, quotes, angle brackets, non-ASCII) is percent-encoded.
_URL_SAFE = ":/?#[]@!$&'()*+,;=%-._~"

_ALLOWED_SCHEMES = frozenset({"http", "https", "mailto", "tel", "ftp"})

# Substituting instead of deleting keeps a rejected URL from turning the
# interpolation into an empty transition.
URL_REPLACEMENT = "about:invalid#blocked"

_CSS_STRING_MAP = {
    "\\": "\\\\",
    '"': "\\22 ",
    "'": "\\27 ",
    "<": "\\3c ",
    ">": "\\3e ",
    "&": "\\26 ",
    "\n": "\\a ",
    "\r": "\\a ",
    "\f": "\\a ",
}
_CSS_STRING_RE = re.compile(r'[\\"\'<>&\n\r\f]')


def escape_pcdata(value) -> str:
    """Escape for an HTML text node; safe HTML passes through verbatim."""
    if isinstance(value, SafeContent) and value.language == "html":
        return value.text
    return stringify(value).translate(_PCDATA_MAP)


def escape_html_attr(value) -> str:
    """Escape for an HTML attribute value.

    SafeContent is not passed through here: the attribute escaper has to
    preserve the integrity of the delimiting quotes, so even safe HTML text
    is re-escaped character by character.
    """
    return stringify(value).translate(_ATTR_MAP)


def filter_url_prefix(value) -> str:
    """Allow http/https/mailto/tel/ftp and relative URLs; block the rest.

    A blocked URL is replaced with a fixed inert URL rather than erased.
    Allowed URLs are returned with characters outside the URL-safe set
    percent-encoded (UTF-8).
    """
    text = stringify(value)
    m = re.search(r"[:/?#]", text)
    if m and text[m.start()] == ":":
        scheme = text[: m.start()].lower()
        if scheme not in _ALLOWED_SCHEMES:
            return URL_REPLACEMENT
    return urllib.parse.quote(text, safe=_URL_SAFE)


def escape_json_value(value) -> str:
    """Serialize as a JSON literal safe for a script element body.

    ``<``, ``>`` and ``&`` are escaped inside the serialized form so the
    output can never contain ``</script`` or an HTML comment opener.
    """
    if isinstance(value, SafeContent):
        raise EscapeError("safe content has no meaning inside a script body")
    try:
        out = json.dumps(value, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise EscapeError(f"cannot serialize value as JSON: {exc}") from None
    return out.replace("<", "\\u003c").replace(">", "\\u003e").replace("&", "\\u0026")


def escape_css_string(value) -> str:
    """Escape for the inside of a CSS string literal (hex escapes keep
    quotes, backslashes, and markup-significant characters inert)."""
    return _CSS_STRING_RE.sub(lambda m: _CSS_STRING_MAP[m.group(0)], stringify(value))


@dataclass(frozen=True)
class Escaper:
    name: str
    transform: Callable[[object], str]
    passthrough: frozenset[str] = field(default_factory=frozenset)

    def apply(self, value) -> str:
        if isinstance(value, SafeContent) and value.language in self.passthrough:
            return value.text
        return self.transform(value)


_REGISTRY: dict[str, Escaper] = {}


def register(escaper: Escaper) -> None:
    _REGISTRY[escaper.name] = escaper


def get(name: str) -> Escaper:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown escaper name {name!r}") from None


def known_names() -> frozenset[str]:
    return frozenset(_REGISTRY)


def apply_chain(names, value) -> str:
    """Apply an escaper chain innermost-first.

    The first escaper sees the raw value (and may honor its SafeContent
    trademark); each later escaper re-escapes the text produced so far.
    """
    out = value
    for name in names:
        out = get(name).apply(out)
    return stringify(out) if not isinstance(out, str) else out


register(Escaper("HtmlPcdataEscaper", escape_pcdata, frozenset({"html"})))
register(Escaper("HtmlAttributeEscaper", escape_html_attr))
register(Escaper("UrlPrefixFilteringEscaper", filter_url_prefix))
register(Escaper("JsonValueEscaper", escape_json_value))
register(Escaper("CssStringEscaper", escape_css_string))
