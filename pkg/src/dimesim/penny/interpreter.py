"""Script execution on a virtual clock.

Each running body is a generator. It yields :class:`Wait` when it needs the
clock to reach some instant; the scheduler resumes whichever task wakes
first (ties by task creation order) and advances the clock to its wake time.
Non-blocking ``onTime`` bodies become new tasks. A ``return`` in the main
script first waits for every other task to finish, then evaluates its
expression.
"""

from __future__ import annotations

import heapq
import ipaddress
import random
import types
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable

from .ast import (
    Assign, Binary, BoolLit, Call, CurrTime, ExprStmt, For, If, IncDec, IpLit,
    Num, OnTime, PrefixLit, Return, Script, Str, TimeLit, Unary, Var, While,
)
from .builtins import BUILTINS, call_builtin, increment, iter_prefix, to_string, type_name
from .clock import Instant, VirtualClock, format_gmt, resolve_time
from .errors import (
    CapabilityError, DivisionByZero, PennyError, PennyRuntimeError, PennyTypeError,
    StepLimitExceeded,
)
from .parser import check_assigned
from .registry import CommandRegistry


@dataclass(frozen=True)
class Wait:
    until: int


_JOIN = object()


class _ReturnSignal(Exception):
    def __init__(self, stmt: Return) -> None:
        self.stmt = stmt


@dataclass
class ExecutionResult:
    value: Any
    records: list = field(default_factory=list)
    log: list[str] = field(default_factory=list)
    steps: int = 0
    started: int = 0
    finished: int = 0


class CommandContext:
    """What a command handler sees of the running script."""

    def __init__(self, interp: Interpreter, name: str) -> None:
        self._interp = interp
        self.name = name

    @property
    def clock(self) -> VirtualClock:
        return self._interp.clock

    @property
    def now(self) -> int:
        return self._interp.clock.now

    @property
    def rng(self) -> random.Random:
        return self._interp.rng

    @property
    def env(self) -> dict:
        return self._interp.env

    def emit(self, record) -> None:
        self._interp.records.append(record)

    def log(self, message: str) -> None:
        self._interp.log(message)

    def sleep_until(self, t: int):
        """Generator helper: ``yield from ctx.sleep_until(t)``."""
        if t > self.now:
            yield Wait(int(t))

    def sleep(self, seconds: int):
        yield from self.sleep_until(self.now + int(seconds))


def _located(exc: PennyError, pos: tuple[int, int]) -> PennyError:
    if exc.line is not None or pos == (0, 0):
        return exc
    new = type(exc)(exc.message, *pos)
    new.__cause__ = exc.__cause__
    return new


def to_value(v):
    """Normalise a handler result to an interpreter value."""
    if isinstance(v, bool) or v is None or isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    if isinstance(v, (str, ipaddress.IPv4Address, ipaddress.IPv4Network, ipaddress.IPv4Interface, Instant)):
        return v
    raise PennyTypeError(f"command returned unsupported value {v!r}")


def truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return v != 0
    raise PennyTypeError(f"condition must be bool or number, got {type_name(v)}")


def _kind(v) -> str:
    return "instant" if isinstance(v, Instant) else type_name(v)


def _whole(v, what: str) -> int:
    if not isinstance(v, Fraction) or v.denominator != 1:
        raise PennyTypeError(f"{what} needs a whole number, got {to_string(v)}")
    return int(v)


def binop(op: str, a, b):
    ka, kb = _kind(a), _kind(b)
    if op == "==":
        return ka == kb and a == b
    if op == "!=":
        return not (ka == kb and a == b)
    if op in ("<", "<=", ">", ">="):
        if ka != kb or ka not in ("number", "ip", "instant", "string"):
            raise PennyTypeError(f"cannot compare {ka} with {kb}")
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    if ka == kb == "number":
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise DivisionByZero("division by zero")
            return a / b
    if op == "+" and ka == kb == "string":
        return a + b
    if ka == "ip" and kb == "number" and op in ("+", "-"):
        k = _whole(b, "ip arithmetic")
        return increment(a, k if op == "+" else -k)
    if ka == kb == "ip" and op == "-":
        return Fraction(int(a) - int(b))
    if ka == "instant" and kb == "number" and op in ("+", "-"):
        k = _whole(b, "time arithmetic")
        return Instant(a.seconds + (k if op == "+" else -k))
    if ka == kb == "instant" and op == "-":
        return Fraction(a.seconds - b.seconds)
    raise PennyTypeError(f"unsupported operands for {op}: {ka} and {kb}")


class Scheduler:
    """Runs tasks from any number of interpreters on one virtual timeline."""

    def __init__(self, clock: VirtualClock) -> None:
        self.clock = clock
        self._heap: list = []
        self._next_tid = 0

    def spawn(self, wake: int, gen, owner: Interpreter, is_main: bool = False) -> None:
        tid = self._next_tid
        self._next_tid += 1
        if not is_main:
            owner._pending += 1
        heapq.heappush(self._heap, (wake, tid, gen, owner, is_main))

    def _resume_later(self, wake: int, tid: int, gen, owner, is_main: bool) -> None:
        heapq.heappush(self._heap, (max(wake, self.clock.now), tid, gen, owner, is_main))

    def run(self, isolate_errors: bool = False) -> None:
        """Drive every task to completion. With ``isolate_errors`` a failing
        script is stopped and recorded on its interpreter (``error``) while
        the others keep running; otherwise the error propagates."""
        while self._heap:
            wake, tid, gen, owner, is_main = heapq.heappop(self._heap)
            if owner.error is not None:
                gen.close()
                continue
            if wake > self.clock.now:
                self.clock.advance_to(wake)
            try:
                event = gen.send(None)
            except StopIteration:
                if not is_main:
                    owner._pending -= 1
                    if owner._pending == 0 and owner._joiner is not None:
                        jtid, jgen = owner._joiner
                        owner._joiner = None
                        self._resume_later(self.clock.now, jtid, jgen, owner, True)
                else:
                    owner._finish(self.clock.now)
                continue
            except PennyError as exc:
                if not isolate_errors:
                    raise
                owner.error = exc
                owner.log(f"error: {exc}")
                owner._finish(self.clock.now)
                continue
            if event is _JOIN:
                if owner._pending == 0:
                    self._resume_later(self.clock.now, tid, gen, owner, is_main)
                else:
                    owner._joiner = (tid, gen)
            elif isinstance(event, Wait):
                self._resume_later(event.until, tid, gen, owner, is_main)
            else:
                raise PennyRuntimeError(f"task yielded {event!r}; handlers may only yield Wait")


class Interpreter:
    def __init__(
        self,
        registry: CommandRegistry,
        clock: VirtualClock,
        capabilities: Iterable[str] | None = None,
        seed: int = 0,
        max_steps: int = 1_000_000,
        trace: bool = False,
    ) -> None:
        self.registry = registry
        self.clock = clock
        self.capabilities = None if capabilities is None else frozenset(capabilities)
        self.rng = random.Random(seed)
        self.max_steps = max_steps
        self.trace = trace
        self.env: dict[str, Any] = {}
        self.records: list = []
        self._log: list[str] = []
        self.steps = 0
        self._scheduler: Scheduler | None = None
        self._pending = 0
        self._joiner = None
        self._outcome: dict[str, Any] = {}
        self._started = self._finished = 0
        self.error: PennyError | None = None
        self.on_done: Callable[[Interpreter], None] | None = None

    def _finish(self, now: int) -> None:
        self._finished = now
        if self.on_done is not None:
            self.on_done(self)

    def log(self, message: str) -> None:
        self._log.append(f"{format_gmt(self.clock.now)} {message}")

    def start(self, script: Script, scheduler: Scheduler, env: dict | None = None) -> None:
        """Queue ``script`` on ``scheduler``; results are ready after it runs."""
        if scheduler.clock is not self.clock:
            raise ValueError("interpreter and scheduler must share one clock")
        self.env = dict(env or {})
        check_assigned(script, set(self.env))
        self.records, self._log, self.steps = [], [], 0
        self._pending, self._joiner = 0, None
        self.error = None
        self._outcome = {"value": None}
        self._scheduler = scheduler
        self._started = self._finished = self.clock.now
        scheduler.spawn(self.clock.now, self._main(script, self.clock.now, self._outcome), self, is_main=True)

    def result(self) -> ExecutionResult:
        return ExecutionResult(
            self._outcome.get("value"), self.records, self._log, self.steps, self._started, self._finished
        )

    def execute(self, script: Script, env: dict | None = None) -> ExecutionResult:
        scheduler = Scheduler(self.clock)
        self.start(script, scheduler, env)
        scheduler.run()
        return self.result()

    def _main(self, script: Script, anchor: int, outcome: dict):
        try:
            yield from self._block(script.statements, anchor)
        except _ReturnSignal as ret:
            yield _JOIN
            value = yield from self._eval_located(ret.stmt.value, anchor, ret.stmt.pos)
            outcome["value"] = value
            self.log(f"return {to_string(value)}")
            return
        yield _JOIN

    def _deferred(self, body, anchor: int):
        try:
            yield from self._stmt(body, anchor)
        except _ReturnSignal as ret:
            value = yield from self._eval_located(ret.stmt.value, anchor, ret.stmt.pos)
            self.log(f"deferred task returned {to_string(value)} (ignored)")

    # -- statements
    def _tick(self, pos) -> None:
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepLimitExceeded(f"more than {self.max_steps} steps", *pos)

    def _block(self, stmts, anchor: int):
        for s in stmts:
            yield from self._stmt(s, anchor)

    def _stmt(self, s, anchor: int):
        self._tick(s.pos)
        if self.trace:
            self.log(f"line {s.pos[0]}: {type(s).__name__}")
        try:
            yield from self._stmt_inner(s, anchor)
        except PennyError as exc:
            located = _located(exc, s.pos)
            if located is exc:
                raise
            raise located from exc

    def _stmt_inner(self, s, anchor: int):
        if isinstance(s, Assign):
            value = yield from self._eval(s.value, anchor)
            if s.op != "=":
                value = binop(s.op[0], self.env[s.name], value)
            self.env[s.name] = value
        elif isinstance(s, IncDec):
            self.env[s.name] = binop(s.op[0], self.env[s.name], Fraction(1))
        elif isinstance(s, ExprStmt):
            yield from self._eval(s.expr, anchor)
        elif isinstance(s, Return):
            raise _ReturnSignal(s)
        elif isinstance(s, While):
            while True:
                cond = yield from self._eval(s.cond, anchor)
                if not truthy(cond):
                    break
                self._tick(s.pos)
                yield from self._block(s.body, anchor)
        elif isinstance(s, If):
            cond = yield from self._eval(s.cond, anchor)
            yield from self._block(s.then if truthy(cond) else s.orelse, anchor)
        elif isinstance(s, For):
            iterable = yield from self._eval(s.iterable, anchor)
            if _kind(iterable) != "prefix":
                raise PennyTypeError(f"for needs a prefix, got {_kind(iterable)}")
            for addr in iter_prefix(iterable):
                self._tick(s.pos)
                self.env[s.var] = addr
                yield from self._block(s.body, anchor)
        elif isinstance(s, OnTime):
            start = self._time(s.start, anchor)
            if s.blocking:
                if start > self.clock.now:
                    self.log(f"wait until {format_gmt(start)}")
                    yield Wait(start)
                elif start < self.clock.now:
                    self.log(f"start {format_gmt(start)} already passed; running now")
                yield from self._stmt(s.body, start)
            else:
                self.log(f"schedule task at {format_gmt(start)}")
                self._scheduler.spawn(max(start, self.clock.now), self._deferred(s.body, start), self)
        else:
            raise TypeError(f"not a statement: {s!r}")

    # -- expressions
    def _time(self, t: TimeLit, anchor: int) -> int:
        return resolve_time(t.base, t.date, t.hour, t.minute, anchor, self.clock.local_offset)

    def _eval_located(self, e, anchor: int, pos):
        try:
            return (yield from self._eval(e, anchor))
        except PennyError as exc:
            located = _located(exc, pos)
            if located is exc:
                raise
            raise located from exc

    def _eval(self, e, anchor: int):
        if isinstance(e, (Num, Str, BoolLit, IpLit, PrefixLit)):
            return e.value
        if isinstance(e, Var):
            return self.env[e.name]
        if isinstance(e, CurrTime):
            return Instant(self.clock.now)
        if isinstance(e, TimeLit):
            return Instant(self._time(e, anchor))
        if isinstance(e, Unary):
            v = yield from self._eval(e.operand, anchor)
            if e.op == "!":
                return not truthy(v)
            if _kind(v) != "number":
                raise PennyTypeError(f"cannot negate {_kind(v)}", *e.pos)
            return -v
        if isinstance(e, Binary):
            if e.op in ("&&", "||"):
                left = truthy((yield from self._eval(e.left, anchor)))
                if (e.op == "&&" and not left) or (e.op == "||" and left):
                    return left
                return truthy((yield from self._eval(e.right, anchor)))
            a = yield from self._eval(e.left, anchor)
            b = yield from self._eval(e.right, anchor)
            try:
                return binop(e.op, a, b)
            except PennyError as exc:
                raise _located(exc, e.pos) from exc
        if isinstance(e, Call):
            return (yield from self._call(e, anchor))
        raise TypeError(f"not an expression: {e!r}")

    def _call(self, e: Call, anchor: int):
        args = []
        for a in e.args:
            args.append((yield from self._eval(a, anchor)))
        try:
            if e.name in BUILTINS:
                return call_builtin(e.name, args, self.rng)
            cmd = self.registry.get(e.name)
            if cmd.capability and self.capabilities is not None and cmd.capability not in self.capabilities:
                raise CapabilityError(f"{e.name} needs capability {cmd.capability!r}")
            if cmd.arity is not None and len(args) != cmd.arity:
                raise PennyTypeError(f"{e.name} takes {cmd.arity} arguments, got {len(args)}")
        except PennyError as exc:
            raise _located(exc, e.pos) from exc
        result = cmd.handler(CommandContext(self, e.name), *args)
        if isinstance(result, types.GeneratorType):
            result = yield from result
        value = to_value(result)
        self.log(f"{e.name}({', '.join(to_string(a) for a in args)}) -> {to_string(value)}")
        if cmd.cost:
            yield Wait(self.clock.now + cmd.cost)
        return value


def execute(
    script: Script,
    registry: CommandRegistry,
    clock: VirtualClock,
    env: dict | None = None,
    capabilities: Iterable[str] | None = None,
    seed: int = 0,
    max_steps: int = 1_000_000,
    trace: bool = False,
) -> ExecutionResult:
    interp = Interpreter(registry, clock, capabilities, seed, max_steps, trace)
    return interp.execute(script, env)


__all__ = ["CommandContext", "ExecutionResult", "Interpreter", "Scheduler", "Wait", "binop", "execute", "to_value", "truthy"]
