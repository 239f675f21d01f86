"""Exception types shared across the toolkit.

Both exception classes derive from ValueError so callers that do not care
about the distinction can catch one type; the CLI maps them (together with
plain ValueError) to exit code 1 and OSError to exit code 2.
"""


class ValidationError(ValueError):
    """A value violates a documented invariant (bad field, duplicate id, ...)."""


class ParseError(ValueError):
    """Malformed input text; message carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
