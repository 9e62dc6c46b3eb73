"""Exception types raised across RoadNet."""


class RoadNetError(Exception):
    """Base class for all RoadNet errors."""


class InvalidParameterError(RoadNetError, ValueError):
    """Raised when a builder or sampler precondition is violated."""

    def __init__(self, parameter: str, message: str):
        self.parameter = parameter
        super().__init__(f"{parameter}: {message}")


class DegenerateConfigurationError(RoadNetError):
    """Raised when a point configuration cannot be triangulated."""

    SIGNAL = "degenerate configuration"

    def __init__(self, details: str = ""):
        self.details = details
        message = self.SIGNAL if not details else f"{self.SIGNAL}: {details}"
        super().__init__(message)


class GeneralPositionError(RoadNetError):
    """Raised when ties appear that general position should exclude."""


class SerializationError(RoadNetError):
    """Raised when an input file is malformed or has the wrong schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
