"""Exception hierarchy shared across the package."""


class GraphError(Exception):
    """Base class for every error raised by uagpnm."""


class ParseError(GraphError):
    """Malformed input line. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(GraphError):
    """Structurally invalid graph, pattern or configuration."""


class IdempotencyError(GraphError):
    """Insert of a present element or delete of an absent one."""


class ContractError(GraphError):
    """An operation was called with arguments outside its contract."""
