"""Exception types shared across the package."""


class SizeError(ValueError):
    """A register, word, or code has the wrong size."""


class QubitIndexError(IndexError):
    pass


class PreconditionError(ValueError):
    pass


class CodeError(ValueError):
    """A generator matrix violates a linear-code invariant."""


class ProtocolViolation(RuntimeError):
    pass


class ConfigError(ValueError):
    """Invalid experiment or protocol configuration; `field` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
