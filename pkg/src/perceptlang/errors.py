"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    col: int
    severity: str
    message: str

    def render(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


class LangError(Exception):
    """Base class for all errors raised by perceptlang."""


class SourceError(LangError):
    """An error tied to a position in a source file."""

    severity = "error"

    def __init__(self, message: str, line: int = 0, col: int = 0, file: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.file = file

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.file, self.line, self.col, self.severity, self.message)

    def __str__(self) -> str:
        return self.diagnostic().render()


class LexError(SourceError):
    pass


class ParseError(SourceError):
    def __init__(self, message, line=0, col=0, file="<input>", expected=()):
        super().__init__(message, line, col, file)
        self.expected = tuple(sorted(set(expected)))


class SemaError(LangError):
    """Raised when checking produced one or more error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in self.diagnostics))


class SchemaError(LangError):
    """Value construction or validation against the schema table failed."""


class DecodeError(LangError):
    """Canonical text could not be parsed back into a value."""


class EvalError(LangError):
    """Runtime failure inside a handler, procedure or behaviour step."""


class SpawnError(LangError):
    pass


class BehaviourError(LangError):
    """Activation or deactivation of a behaviour was rejected."""


class PerceptRejected(LangError):
    pass


class PlatformError(LangError):
    pass


class WireError(LangError):
    pass


class ScenarioError(LangError):
    pass
