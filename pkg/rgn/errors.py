"""Exception hierarchy shared across the package."""


class RGNError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RGNError, ValueError):
    """Operand shapes are incompatible."""


class ConfigError(RGNError, ValueError):
    """A configuration object violates its invariants."""


class TopologyError(RGNError, ValueError):
    """A graph topology is malformed or queried out of range."""


class CheckpointError(RGNError, ValueError):
    """A checkpoint file is corrupt or does not match the model."""


class ManifestError(RGNError, ValueError):
    """A sample manifest failed to parse or validate."""

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = problems or []
        if self.problems:
            message = message + ": " + "; ".join(self.problems)
        super().__init__(message)


class DataError(RGNError, ValueError):
    """Feature tables, pair sets or batches are inconsistent."""


class GradientError(RGNError):
    """Backward pass preconditions are not met."""
