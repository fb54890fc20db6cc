"""Tokenizer. Positions are 1-based; identifiers are NFC-normalised."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass

from .diagnostics import DiagnosticError, error

PUNCT = ("->", "{", "}", "(", ")", ",", ".", ":", "=", "<")
OPENERS = {"(": ")", "{": "}"}
CLOSERS = {v: k for k, v in OPENERS.items()}

# combining marks are not \w, yet decomposed (NFD) identifiers need them
_MARKS = "\u0300-\u036f\u1ab0-\u1aff\u1dc0-\u1dff\u20d0-\u20ff\ufe20-\ufe2f"
_IDENT = re.compile(rf"[^\W\d][\w{_MARKS}]*")
_NUMBER = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_STRING = re.compile(r'"(?:[^"\\\n]|\\.)*"')
_SPACE = re.compile(r"[ \t\r\f\v]+")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | punct | eof
    value: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        m = _SPACE.match(text, i)
        if m:
            col += m.end() - i
            i = m.end()
            continue
        if ch == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            col += j - i
            i = j
            continue
        if ch == '"':
            m = _STRING.match(text, i)
            if not m:
                raise DiagnosticError([error("unterminated string literal", line, col)])
            try:
                value = json.loads(m.group())
            except json.JSONDecodeError:
                raise DiagnosticError([error("invalid escape in string literal", line, col)]) from None
            tokens.append(Token("string", value, line, col))
        elif m := _NUMBER.match(text, i):
            tokens.append(Token("number", m.group(), line, col))
        elif m := _IDENT.match(text, i):
            tokens.append(Token("ident", unicodedata.normalize("NFC", m.group()), line, col))
        else:
            for p in PUNCT:
                if text.startswith(p, i):
                    m = None
                    tokens.append(Token("punct", p, line, col))
                    col += len(p)
                    i += len(p)
                    break
            else:
                raise DiagnosticError([error(f"unexpected character {ch!r}", line, col)])
            continue
        col += m.end() - i
        i = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def bracket_diagnostics(tokens: list[Token]):
    """Unbalanced brackets, each reported at the offending bracket."""
    stack: list[Token] = []
    out = []
    for tok in tokens:
        if tok.kind != "punct":
            continue
        if tok.value in OPENERS:
            stack.append(tok)
        elif tok.value in CLOSERS:
            if not stack:
                out.append(error(f"unmatched {tok.value!r}", tok.line, tok.column))
            elif OPENERS[stack[-1].value] != tok.value:
                opener = stack.pop()
                out.append(error(f"{opener.value!r} closed by {tok.value!r}", tok.line, tok.column))
            else:
                stack.pop()
    out.extend(error(f"unclosed {t.value!r}", t.line, t.column) for t in stack)
    return sorted(out, key=lambda d: (d.line, d.column))
