"""Exception hierarchy.

Every error raised by the package derives from :class:`ClutterSegError` so
callers (notably the CLI) can map failures onto exit codes.
"""


class ClutterSegError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(ClutterSegError, ValueError):
    """Input lies outside the domain of a geometric operation."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DataError(ClutterSegError, ValueError):
    """Malformed or incomplete data."""


class ContractError(ClutterSegError, ValueError):
    """A documented precondition was violated by the caller."""


class OrderingError(ContractError):
    """Scans were passed out of temporal order."""


class InfeasibleError(ClutterSegError, ValueError):
    """The requested operation has no solution for the given inputs."""


class ConfigError(ClutterSegError, ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class TrainingError(ClutterSegError, RuntimeError):
    """Training diverged or produced non-finite values."""


class CheckpointError(ClutterSegError, ValueError):
    """Checkpoint is incompatible with the requested configuration."""
