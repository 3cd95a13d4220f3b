"""Recursive-descent parser and the static assigned-before-use check.

Grammar (normative)::

    script    := sep* (stmt (sep+ stmt)*)? sep*
    sep       := NEWLINE | ';'
    stmt      := IDENT '=' expr | IDENT ('+='|'-='|'*='|'/=') expr
               | IDENT ('++'|'--')
               | 'while' '(' expr ')' block
               | 'if' '(' expr ')' block ('else' (block | if))?
               | 'for' IDENT 'in' expr block
               | 'onTime' 'nonblocking'? sep* 'startTime' timespec sep* stmt
               | 'return' expr
               | expr
    block     := NEWLINE* '{' sep* (stmt (sep+ stmt)*)? sep* '}'
    timespec  := ('local'|'gmt') DATE? TIME | 'relative' TIME
    expr      := and ('||' and)*
    and       := cmp ('&&' cmp)*
    cmp       := add (('<'|'<='|'>'|'>='|'=='|'!=') add)?
    add       := mul (('+'|'-') mul)*
    mul       := unary (('*'|'/') unary)*
    unary     := ('-'|'!') unary | primary
    primary   := NUMBER | STRING | IP | PREFIX | 'true' | 'false' | timespec
               | 'currTime' | IDENT | IDENT '(' (expr (',' expr)*)? ')'
               | '(' expr ')'

A time of day without a date means its next occurrence at or after the
enclosing ``onTime`` start (or the script start); ``relative`` is an offset
from that same anchor.
"""

from __future__ import annotations

from .ast import (
    COMPARISONS, Assign, Binary, BoolLit, Call, CurrTime, ExprStmt, For, If,
    IncDec, IpLit, Num, OnTime, PrefixLit, Return, Script, Stmt, Str, TimeLit,
    Unary, Var, While, walk,
)
from .errors import PennySyntaxError, UnassignedNameError
from .lexer import Token, tokenize

AUG_OPS = {"+=", "-=", "*=", "/="}


class Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind == "KEYWORD" and self.tok.text in words

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None) -> PennySyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text or "newline")
        return PennySyntaxError(f"{msg}, found {found}", tok.line, tok.col)

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}")
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(f"expected {word!r}")
        return self.advance()

    def is_sep(self) -> bool:
        return self.tok.kind == "NEWLINE" or self.at_op(";")

    def skip_seps(self) -> None:
        while self.is_sep():
            self.advance()

    def skip_newlines(self) -> None:
        while self.tok.kind == "NEWLINE":
            self.advance()

    # -- statements
    def parse_script(self) -> Script:
        stmts = self.statement_list(end="EOF")
        return Script(tuple(stmts))

    def statement_list(self, end: str) -> list[Stmt]:
        def done() -> bool:
            return self.at("EOF") if end == "EOF" else self.at_op("}")

        stmts: list[Stmt] = []
        self.skip_seps()
        while not done():
            if self.at("EOF"):
                raise self.error("expected '}'")
            stmts.append(self.statement())
            if done():
                break
            if not self.is_sep():
                raise self.error("expected end of statement")
            self.skip_seps()
        return stmts

    def block(self) -> tuple[Stmt, ...]:
        self.skip_newlines()
        self.expect_op("{")
        body = self.statement_list(end="}")
        self.expect_op("}")
        return tuple(body)

    def statement(self) -> Stmt:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "KEYWORD":
            if t.text == "while":
                self.advance()
                self.expect_op("(")
                cond = self.expr()
                self.expect_op(")")
                return While(cond, self.block(), pos=pos)
            if t.text == "if":
                return self.if_stmt()
            if t.text == "for":
                self.advance()
                if not self.at("IDENT"):
                    raise self.error("expected loop variable")
                var = self.advance().text
                self.expect_kw("in")
                iterable = self.expr()
                return For(var, iterable, self.block(), pos=pos)
            if t.text == "onTime":
                self.advance()
                blocking = True
                if self.at_kw("nonblocking"):
                    self.advance()
                    blocking = False
                self.skip_seps()
                self.expect_kw("startTime")
                start = self.timespec()
                self.skip_seps()
                if self.at("EOF") or self.at_op("}"):
                    raise self.error("onTime needs a statement")
                return OnTime(start, self.statement(), blocking, pos=pos)
            if t.text == "return":
                self.advance()
                return Return(self.expr(), pos=pos)
        if t.kind == "IDENT":
            nxt = self.peek()
            if nxt.kind == "OP" and nxt.text == "=":
                self.advance()
                self.advance()
                return Assign(t.text, "=", self.expr(), pos=pos)
            if nxt.kind == "OP" and nxt.text in AUG_OPS:
                self.advance()
                self.advance()
                return Assign(t.text, nxt.text, self.expr(), pos=pos)
            if nxt.kind == "OP" and nxt.text in ("++", "--"):
                self.advance()
                self.advance()
                return IncDec(t.text, nxt.text, pos=pos)
        return ExprStmt(self.expr(), pos=pos)

    def if_stmt(self) -> If:
        t = self.expect_kw("if")
        self.expect_op("(")
        cond = self.expr()
        self.expect_op(")")
        then = self.block()
        orelse: tuple[Stmt, ...] = ()
        # allow "else" on the line after the closing brace
        save = self.i
        self.skip_newlines()
        if self.at_kw("else"):
            self.advance()
            if self.at_kw("if"):
                orelse = (self.if_stmt(),)
            else:
                orelse = self.block()
        else:
            self.i = save
        return If(cond, then, orelse, pos=(t.line, t.col))

    def timespec(self) -> TimeLit:
        t = self.tok
        if not self.at_kw("local", "gmt", "relative"):
            raise self.error("expected a time base (local, gmt or relative)")
        base = self.advance().text
        date = None
        if self.at("DATE"):
            if base == "relative":
                raise self.error("relative times take no date")
            date = self.advance().value
        if not self.at("TIME"):
            raise self.error("expected HH:MM")
        tt = self.advance()
        hour, minute = tt.value
        if base != "relative" and hour > 23:
            raise PennySyntaxError(f"hour out of range in {tt.text}", tt.line, tt.col)
        return TimeLit(base, date, hour, minute, pos=(t.line, t.col))

    # -- expressions
    def expr(self):
        left = self.and_expr()
        while self.at_op("||"):
            op = self.advance()
            left = Binary("||", left, self.and_expr(), pos=(op.line, op.col))
        return left

    def and_expr(self):
        left = self.cmp_expr()
        while self.at_op("&&"):
            op = self.advance()
            left = Binary("&&", left, self.cmp_expr(), pos=(op.line, op.col))
        return left

    def cmp_expr(self):
        left = self.add_expr()
        if self.tok.kind == "OP" and self.tok.text in COMPARISONS:
            op = self.advance()
            left = Binary(op.text, left, self.add_expr(), pos=(op.line, op.col))
            if self.tok.kind == "OP" and self.tok.text in COMPARISONS:
                raise self.error("comparisons do not chain; add parentheses")
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.at_op("+", "-"):
            op = self.advance()
            left = Binary(op.text, left, self.mul_expr(), pos=(op.line, op.col))
        return left

    def mul_expr(self):
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.advance()
            left = Binary(op.text, left, self.unary(), pos=(op.line, op.col))
        return left

    def unary(self):
        if self.at_op("-", "!"):
            op = self.advance()
            return Unary(op.text, self.unary(), pos=(op.line, op.col))
        return self.primary()

    def primary(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "NUMBER":
            self.advance()
            return Num(t.value, pos=pos)
        if t.kind == "STRING":
            self.advance()
            return Str(t.value, pos=pos)
        if t.kind == "IP":
            self.advance()
            return IpLit(t.value, pos=pos)
        if t.kind == "PREFIX":
            self.advance()
            return PrefixLit(t.value, pos=pos)
        if t.kind == "KEYWORD":
            if t.text in ("true", "false"):
                self.advance()
                return BoolLit(t.text == "true", pos=pos)
            if t.text == "currTime":
                self.advance()
                return CurrTime(pos=pos)
            if t.text in ("local", "gmt", "relative"):
                return self.timespec()
        if t.kind == "IDENT":
            self.advance()
            if self.at_op("("):
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.expr())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.expr())
                self.expect_op(")")
                return Call(t.text, tuple(args), pos=pos)
            return Var(t.text, pos=pos)
        if self.at_op("("):
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        raise self.error("expected an expression")


# -- static check ---------------------------------------------------------------


def _check_expr(expr, defined: set[str]) -> None:
    for node in walk(expr):
        if isinstance(node, Var) and node.name not in defined:
            raise UnassignedNameError(f"{node.name!r} is used before it is assigned", *node.pos)


def _check_block(stmts, defined: set[str]) -> set[str]:
    defined = set(defined)
    for s in stmts:
        defined = _check_stmt(s, defined)
    return defined


def _check_stmt(s, defined: set[str]) -> set[str]:
    if isinstance(s, Assign):
        _check_expr(s.value, defined)
        if s.op != "=" and s.name not in defined:
            raise UnassignedNameError(f"{s.name!r} is updated before it is assigned", *s.pos)
        return defined | {s.name}
    if isinstance(s, IncDec):
        if s.name not in defined:
            raise UnassignedNameError(f"{s.name!r} is updated before it is assigned", *s.pos)
        return defined
    if isinstance(s, (Return, ExprStmt)):
        _check_expr(s.value if isinstance(s, Return) else s.expr, defined)
        return defined
    if isinstance(s, While):
        _check_expr(s.cond, defined)
        _check_block(s.body, defined)  # may run zero times
        return defined
    if isinstance(s, For):
        _check_expr(s.iterable, defined)
        _check_block(s.body, defined | {s.var})
        return defined
    if isinstance(s, If):
        _check_expr(s.cond, defined)
        return _check_block(s.then, defined) & _check_block(s.orelse, defined)
    if isinstance(s, OnTime):
        after = _check_stmt(s.body, defined)
        # a deferred body runs later, so nothing it assigns is visible after it
        return after if s.blocking else defined
    raise TypeError(f"not a statement: {s!r}")


def check_assigned(script: Script, predefined: set[str] | None = None) -> None:
    """Reject any read of a name not assigned on every path before it."""
    _check_block(script.statements, set(predefined or ()))


def parse(text: str, check: bool = True) -> Script:
    script = Parser(text).parse_script()
    if check:
        check_assigned(script)
    return script
