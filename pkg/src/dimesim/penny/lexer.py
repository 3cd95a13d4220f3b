"""Tokenizer.

Dates (``MM/DD/YY``) are only recognised right after a time-base keyword, so
``6/5`` elsewhere is still a division. Newlines are significant.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import PennySyntaxError

KEYWORDS = {
    "while", "if", "else", "for", "in", "onTime", "nonblocking", "startTime",
    "return", "local", "gmt", "relative", "currTime", "true", "false",
}
TIME_BASES = {"local", "gmt", "relative"}
OPERATORS = [
    "++", "--", "+=", "-=", "*=", "/=", "<=", ">=", "==", "!=", "&&", "||",
    "<", ">", "=", "+", "-", "*", "/", "!", "(", ")", "{", "}", ",", ";",
]

_QUAD = r"\d{1,3}(?:\.\d{1,3}){3}"
_TOKEN_RE = re.compile(
    "|".join(
        [
            r"(?P<ws>[ \t\r]+)",
            r"(?P<newline>\n)",
            r"(?P<comment>(?://|\#)[^\n]*)",
            rf"(?P<prefix>{_QUAD}/\d{{1,2}})(?![\d.])",
            rf"(?P<ip>{_QUAD})(?![\d.])",
            r"(?P<date>\d{2}/\d{2}/\d{2})(?!\d)",
            r"(?P<time>\d{1,2}:\d{2})(?!\d)",
            r"(?P<number>\d+(?:\.\d+)?)(?![\d.])",
            r'(?P<string>"(?:\\.|[^"\\\n])*")',
            r"(?P<ident>[A-Za-z_][A-Za-z0-9_]*)",
            "(?P<op>" + "|".join(re.escape(o) for o in OPERATORS) + ")",
        ]
    )
)
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # NEWLINE NUMBER STRING IP PREFIX DATE TIME IDENT KEYWORD OP EOF
    text: str
    value: object
    line: int
    col: int


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise PennySyntaxError(f"unknown escape \\{nxt}", line, col + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos].isdigit():
                raise PennySyntaxError("malformed literal", line, col)
            raise PennySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        after_base = bool(tokens) and tokens[-1].kind == "KEYWORD" and tokens[-1].text in TIME_BASES
        if kind == "date" and not after_base:
            # not a date here: fall back to the number that starts it
            m = re.compile(r"\d+").match(text, pos)
            kind, raw = "number", m.group()
        pos += len(raw)
        if kind == "ws" or kind == "comment":
            continue
        if kind == "newline":
            tokens.append(Token("NEWLINE", raw, None, line, col))
            line += 1
            line_start = pos
            continue
        if kind == "prefix":
            try:
                value = ipaddress.IPv4Interface(raw)
            except ValueError:
                raise PennySyntaxError(f"malformed prefix literal {raw}", line, col) from None
            tokens.append(Token("PREFIX", raw, value, line, col))
        elif kind == "ip":
            try:
                value = ipaddress.IPv4Address(raw)
            except ValueError:
                raise PennySyntaxError(f"malformed address literal {raw}", line, col) from None
            tokens.append(Token("IP", raw, value, line, col))
        elif kind == "date":
            mo, d, y = (int(x) for x in raw.split("/"))
            if not (1 <= mo <= 12 and 1 <= d <= 31):
                raise PennySyntaxError(f"malformed date {raw}", line, col)
            tokens.append(Token("DATE", raw, (mo, d, y), line, col))
        elif kind == "time":
            h, mi = (int(x) for x in raw.split(":"))
            if mi > 59:
                raise PennySyntaxError(f"malformed time {raw}", line, col)
            tokens.append(Token("TIME", raw, (h, mi), line, col))
        elif kind == "number":
            tokens.append(Token("NUMBER", raw, Fraction(raw), line, col))
        elif kind == "string":
            tokens.append(Token("STRING", raw, _unescape(raw[1:-1], line, col), line, col))
        elif kind == "ident" and raw.lower() in TIME_BASES:
            # time bases are case-insensitive so "GMT" reads naturally
            tokens.append(Token("KEYWORD", raw.lower(), raw.lower(), line, col))
        elif kind == "ident":
            tokens.append(Token("KEYWORD" if raw in KEYWORDS else "IDENT", raw, raw, line, col))
        else:
            tokens.append(Token("OP", raw, raw, line, col))
    col = pos - line_start + 1
    tokens.append(Token("EOF", "", None, line, col))
    return tokens
