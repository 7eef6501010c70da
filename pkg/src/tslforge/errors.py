"""Exception hierarchy shared by all stages of the toolchain."""

from __future__ import annotations


class TSLError(Exception):
    """Base class for every error raised by tslforge."""


class ArityConflict(TSLError):
    def __init__(self, literal: str, arities=()):
        self.literal = literal
        self.arities = tuple(arities)
        super().__init__(f"literal {literal!r} used with arities {list(self.arities)}")


class SignalAsLiteral(TSLError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"{name!r} is used both as a signal and as a function literal")


class ClassificationError(TSLError):
    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(message)


class ParseError(TSLError):
    """Parse failure with a 1-based source position.

    ``kind`` is one of ``lexical``, ``syntax``, ``arity`` or
    ``classification``.
    """

    def __init__(self, kind: str, message: str, line: int = 1, column: int = 1):
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {kind} error: {message}")

    @property
    def position(self) -> tuple[int, int]:
        return self.line, self.column


class EmptyUpdateGroup(TSLError):
    def __init__(self, signal: str):
        self.signal = signal
        super().__init__(f"output {signal!r} has no update anywhere in the specification")


class ResourceLimit(TSLError):
    """A solver or construction exceeded its configured budget."""


class CapacityError(TSLError):
    """An instance is larger than the configured desk-scale limits."""


class NonExclusiveOutput(TSLError):
    def __init__(self, target: str, detail: str = ""):
        self.target = target
        super().__init__(f"machine does not select exactly one update for {target!r} {detail}".strip())


class FormatError(TSLError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class EvalError(TSLError):
    """Base class for runtime evaluation errors."""


class UnboundLiteral(EvalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no definition for {name!r}")


class UnboundSignal(EvalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"signal {name!r} has no value")


class ArityMismatch(EvalError):
    def __init__(self, name: str, expected: int, got: int):
        self.name = name
        super().__init__(f"{name!r} expects {expected} argument(s), got {got}")


class EvalTypeError(EvalError):
    pass


class DivisionByZero(EvalError):
    pass
