"""Extensible command table.

A handler is called as ``handler(ctx, *args)`` and returns a value, or is a
generator that yields :class:`~dimesim.penny.interpreter.Wait` events while
it blocks on virtual time and returns its value at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .builtins import BUILTINS
from .errors import DuplicateCommandError, UnknownCommandError


@dataclass(frozen=True)
class Command:
    name: str
    arity: int | None  # None accepts any number of arguments
    capability: str | None
    handler: Callable
    cost: int = 0  # virtual seconds charged after each call


class CommandRegistry:
    def __init__(self, commands: Iterable[Command] = ()) -> None:
        self._commands: dict[str, Command] = {}
        for c in commands:
            self.add(c)

    def add(self, command: Command) -> CommandRegistry:
        if command.name in self._commands:
            raise DuplicateCommandError(f"command {command.name!r} is already registered")
        if command.name in BUILTINS:
            raise DuplicateCommandError(f"{command.name!r} is a builtin")
        if command.cost < 0:
            raise ValueError("command cost must be >= 0")
        self._commands[command.name] = command
        return self

    def register(
        self,
        name: str,
        arity: int | None,
        capability: str | None = None,
        handler: Callable | None = None,
        cost: int = 0,
    ) -> CommandRegistry:
        if handler is None:
            def handler(ctx, *args, _name=name):
                raise UnknownCommandError(f"{_name} has no handler installed")
        return self.add(Command(name, arity, capability, handler, cost))

    def get(self, name: str) -> Command:
        try:
            return self._commands[name]
        except KeyError:
            raise UnknownCommandError(f"unknown command {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._commands

    def __len__(self) -> int:
        return len(self._commands)

    def names(self) -> list[str]:
        return sorted(self._commands)

    def copy(self) -> CommandRegistry:
        return CommandRegistry(self._commands.values())


def register_command(
    registry: CommandRegistry,
    name: str,
    arity: int | None,
    capability: str | None = None,
    handler: Callable | None = None,
    cost: int = 0,
) -> CommandRegistry:
    return registry.register(name, arity, capability, handler, cost)
