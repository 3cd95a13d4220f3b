"""PENny: a small measurement scripting language with timed blocks."""

from __future__ import annotations

from .ast import Script, to_source
from .builtins import (
    increment, iter_prefix, prefix_base, prefix_broadcast, random_in_prefix,
)
from .clock import Instant, VirtualClock, parse_clock_start, parse_offset, resolve_time
from .errors import (
    AddressOverflowError, CapabilityError, ClockError, DivisionByZero,
    DuplicateCommandError, PennyError, PennyRuntimeError, PennySyntaxError,
    PennyTypeError, StepLimitExceeded, UnassignedNameError, UnknownCommandError,
)
from .interpreter import CommandContext, ExecutionResult, Interpreter, Scheduler, Wait, execute
from .parser import check_assigned, parse
from .registry import Command, CommandRegistry, register_command

__all__ = [
    "AddressOverflowError", "CapabilityError", "ClockError", "Command", "CommandContext",
    "CommandRegistry", "DivisionByZero", "DuplicateCommandError", "ExecutionResult",
    "Instant", "Interpreter", "PennyError", "PennyRuntimeError", "PennySyntaxError",
    "PennyTypeError", "Scheduler", "Script", "StepLimitExceeded", "UnassignedNameError",
    "UnknownCommandError", "VirtualClock", "Wait", "check_assigned", "execute",
    "increment", "iter_prefix", "parse", "parse_clock_start", "parse_offset",
    "prefix_base", "prefix_broadcast", "random_in_prefix", "register_command",
    "resolve_time", "to_source",
]
