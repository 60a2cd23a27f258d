"""Exceptions shared across modules."""


class Unsupported(Exception):
    """The input lies outside the fragment the engine decides."""


class ResourceError(RuntimeError):
    """A configured enumeration or size cap was exceeded."""

    def __init__(self, message, attempted=None):
        super().__init__(message)
        self.attempted = attempted
