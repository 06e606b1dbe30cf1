"""Exception hierarchy shared across the toolkit."""


class NerbreakerError(Exception):
    """Base class for all toolkit errors."""


class ParseError(NerbreakerError):
    """Corpus text could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VectorLoadError(NerbreakerError):
    """Word-vector file is malformed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigurationError(NerbreakerError):
    """A run was configured inconsistently (missing POS source, bad threshold, ...)."""


class AdapterError(NerbreakerError):
    """The model endpoint could not be reached or failed mid-request."""


class ProtocolError(AdapterError):
    """The endpoint answered, but the reply violates the wire protocol."""
