"""Syntax tree for PENny scripts and its canonical printer.

Source positions are carried on every node but excluded from equality, so
``parse(to_source(tree)) == tree`` holds for any parsed tree.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union


def _pos():
    return field(default=(0, 0), compare=False, repr=False, kw_only=True)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Str:
    value: str
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class IpLit:
    value: ipaddress.IPv4Address
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class PrefixLit:
    # keeps the written address, so 10.1.2.3/16 survives until prefix_base masks it
    value: ipaddress.IPv4Interface
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class TimeLit:
    base: str  # "local" | "gmt" | "relative"
    date: tuple[int, int, int] | None  # (month, day, two-digit year)
    hour: int
    minute: int
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class CurrTime:
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    pos: tuple[int, int] = _pos()


Expr = Union[Num, Str, BoolLit, IpLit, PrefixLit, TimeLit, CurrTime, Var, Call, Unary, Binary]

# -- statements ---------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    name: str
    op: str  # "=", "+=", "-=", "*=", "/="
    value: Expr
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class IncDec:
    name: str
    op: str  # "++" | "--"
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple[Stmt, ...]
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class For:
    var: str
    iterable: Expr
    body: tuple[Stmt, ...]
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class OnTime:
    start: TimeLit
    body: Stmt
    blocking: bool = True
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Return:
    value: Expr
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    pos: tuple[int, int] = _pos()


Stmt = Union[Assign, IncDec, While, If, For, OnTime, Return, ExprStmt]


@dataclass(frozen=True)
class Script:
    statements: tuple[Stmt, ...]

    def commands(self) -> set[str]:
        """Names of every call that is not a builtin."""
        from .builtins import BUILTINS

        names: set[str] = set()
        for node in walk(self):
            if isinstance(node, Call) and node.name not in BUILTINS:
                names.add(node.name)
        return names


def walk(node):
    yield node
    if isinstance(node, Script):
        for s in node.statements:
            yield from walk(s)
    elif isinstance(node, (Assign, Return)):
        yield from walk(node.value)
    elif isinstance(node, ExprStmt):
        yield from walk(node.expr)
    elif isinstance(node, While):
        yield from walk(node.cond)
        for s in node.body:
            yield from walk(s)
    elif isinstance(node, If):
        yield from walk(node.cond)
        for s in node.then + node.orelse:
            yield from walk(s)
    elif isinstance(node, For):
        yield from walk(node.iterable)
        for s in node.body:
            yield from walk(s)
    elif isinstance(node, OnTime):
        yield from walk(node.start)
        yield from walk(node.body)
    elif isinstance(node, Call):
        for a in node.args:
            yield from walk(a)
    elif isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)


# -- printer ------------------------------------------------------------------

PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "<": 3, "<=": 3, ">": 3, ">=": 3, "==": 3, "!=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5,
}
COMPARISONS = {"<", "<=", ">", ">=", "==", "!="}
UNARY_PRECEDENCE = 6


def format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        raise ValueError(f"{value} has no finite decimal form")
    places = max(twos, fives)
    scaled = value.numerator * 10**places // value.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def format_time(t: TimeLit) -> str:
    parts = [t.base]
    if t.date is not None:
        m, d, y = t.date
        parts.append(f"{m:02d}/{d:02d}/{y:02d}")
    parts.append(f"{t.hour:02d}:{t.minute:02d}")
    return " ".join(parts)


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return UNARY_PRECEDENCE
    if isinstance(e, TimeLit):
        # a bare time literal swallows nothing, but reads better wrapped in arithmetic
        return UNARY_PRECEDENCE + 1
    return UNARY_PRECEDENCE + 1


def format_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Str):
        return _quote(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IpLit):
        return str(e.value)
    if isinstance(e, PrefixLit):
        return str(e.value)
    if isinstance(e, TimeLit):
        return format_time(e)
    if isinstance(e, CurrTime):
        return "currTime"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        inner = format_expr(e.operand)
        if isinstance(e.operand, (Binary, Unary)):
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, Binary):
        p = PRECEDENCE[e.op]
        left, right = format_expr(e.left), format_expr(e.right)
        lp, rp = _prec(e.left), _prec(e.right)
        if lp < p or (e.op in COMPARISONS and lp == p):
            left = f"({left})"
        if rp <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _format_block(stmts: tuple[Stmt, ...], indent: int) -> list[str]:
    lines = []
    for s in stmts:
        lines.extend(_format_stmt(s, indent))
    return lines


def _format_stmt(s: Stmt, indent: int) -> list[str]:
    pad = "    " * indent
    if isinstance(s, Assign):
        return [f"{pad}{s.name} {s.op} {format_expr(s.value)}"]
    if isinstance(s, IncDec):
        return [f"{pad}{s.name}{s.op}"]
    if isinstance(s, Return):
        return [f"{pad}return {format_expr(s.value)}"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{format_expr(s.expr)}"]
    if isinstance(s, While):
        return [f"{pad}while ({format_expr(s.cond)}) {{", *_format_block(s.body, indent + 1), f"{pad}}}"]
    if isinstance(s, For):
        return [
            f"{pad}for {s.var} in {format_expr(s.iterable)} {{",
            *_format_block(s.body, indent + 1),
            f"{pad}}}",
        ]
    if isinstance(s, If):
        lines = [f"{pad}if ({format_expr(s.cond)}) {{", *_format_block(s.then, indent + 1)]
        node = s
        while node.orelse:
            if len(node.orelse) == 1 and isinstance(node.orelse[0], If):
                node = node.orelse[0]
                lines.append(f"{pad}}} else if ({format_expr(node.cond)}) {{")
                lines.extend(_format_block(node.then, indent + 1))
            else:
                lines.append(f"{pad}}} else {{")
                lines.extend(_format_block(node.orelse, indent + 1))
                break
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, OnTime):
        header = "onTime" if s.blocking else "onTime nonblocking"
        return [f"{pad}{header}", f"{pad}startTime {format_time(s.start)}", *_format_stmt(s.body, indent)]
    raise TypeError(f"not a statement: {s!r}")


def to_source(script: Script) -> str:
    return "\n".join(_format_block(script.statements, 0)) + "\n"
