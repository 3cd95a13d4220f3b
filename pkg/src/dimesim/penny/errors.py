from __future__ import annotations


class PennyError(Exception):
    """Base class; carries an optional 1-based source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None) -> None:
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class PennySyntaxError(PennyError):
    pass


class UnassignedNameError(PennySyntaxError):
    pass


class PennyRuntimeError(PennyError):
    pass


class PennyTypeError(PennyRuntimeError):
    pass


class DivisionByZero(PennyRuntimeError):
    pass


class UnknownCommandError(PennyRuntimeError):
    pass


class CapabilityError(PennyRuntimeError):
    pass


class AddressOverflowError(PennyRuntimeError):
    pass


class StepLimitExceeded(PennyRuntimeError):
    pass


class DuplicateCommandError(ValueError):
    pass


class ClockError(ValueError):
    pass
