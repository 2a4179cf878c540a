"""Minimal s-expression reader and printer shared by every text format.

Data model: ``Symbol`` (a ``str`` subclass), plain ``str`` for string
literals, ``int``, ``float``, ``bool`` (``#t``/``#f``) and ``list``.
Square brackets read as parentheses.
"""

from __future__ import annotations

import math
import re


class Symbol(str):
    __slots__ = ()

    def __repr__(self):
        return f"Symbol({str.__repr__(self)})"


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f" at {line}:{col}" if line is not None else ""
        super().__init__(f"{msg}{where}")


_INT = re.compile(r"[+-]?\d+\Z")
_FLOAT = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")
_SPECIAL_FLOATS = {"+inf.0": math.inf, "-inf.0": -math.inf, "+nan.0": math.nan}
_DELIMS = set("()[]\";")


def _position(text, i):
    line = text.count("\n", 0, i) + 1
    col = i - (text.rfind("\n", 0, i) + 1) + 1
    return line, col


def _atom(tok):
    if _INT.match(tok):
        return int(tok)
    if _FLOAT.match(tok):
        return float(tok)
    if tok in _SPECIAL_FLOATS:
        return _SPECIAL_FLOATS[tok]
    if tok == "#t":
        return True
    if tok == "#f":
        return False
    return Symbol(tok)


def _skip(text, i):
    n = len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            break
    return i


def _read(text, i):
    i = _skip(text, i)
    if i >= len(text):
        raise ParseError("unexpected end of input", *_position(text, i))
    c = text[i]
    if c in "([":
        close = ")" if c == "(" else "]"
        start = i
        i += 1
        items = []
        while True:
            i = _skip(text, i)
            if i >= len(text):
                raise ParseError("unclosed list", *_position(text, start))
            if text[i] in ")]":
                if text[i] != close:
                    raise ParseError("mismatched bracket", *_position(text, i))
                return items, i + 1
            item, i = _read(text, i)
            items.append(item)
    if c in ")]":
        raise ParseError("unexpected close bracket", *_position(text, i))
    if c == '"':
        out = []
        j = i + 1
        while j < len(text) and text[j] != '"':
            if text[j] == "\\" and j + 1 < len(text):
                j += 1
                out.append({"n": "\n", "t": "\t"}.get(text[j], text[j]))
            else:
                out.append(text[j])
            j += 1
        if j >= len(text):
            raise ParseError("unterminated string", *_position(text, i))
        return "".join(out), j + 1
    j = i
    while j < len(text) and not text[j].isspace() and text[j] not in _DELIMS:
        j += 1
    return _atom(text[i:j]), j


def read_all(text: str) -> list:
    """Read every datum in ``text``."""
    out = []
    i = _skip(text, 0)
    while i < len(text):
        datum, i = _read(text, i)
        out.append(datum)
        i = _skip(text, i)
    return out


def read(text: str):
    """Read exactly one datum."""
    data = read_all(text)
    if len(data) != 1:
        raise ParseError(f"expected one datum, found {len(data)}")
    return data[0]


def _float_text(x: float) -> str:
    if math.isnan(x):
        return "+nan.0"
    if math.isinf(x):
        return "+inf.0" if x > 0 else "-inf.0"
    text = repr(x)
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _string_text(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def dumps(datum) -> str:
    if isinstance(datum, Symbol):
        return str(datum)
    if isinstance(datum, bool):
        return "#t" if datum else "#f"
    if isinstance(datum, int):
        return str(datum)
    if isinstance(datum, float):
        return _float_text(datum)
    if isinstance(datum, str):
        return _string_text(datum)
    if isinstance(datum, (list, tuple)):
        return "(" + " ".join(dumps(d) for d in datum) + ")"
    raise TypeError(f"cannot print {datum!r} as an s-expression")


def sym(name: str) -> Symbol:
    return Symbol(name)
