"""Exception types raised across the package."""


class MsProfileError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MsProfileError, ValueError):
    pass


class DegenerateGeometryError(MsProfileError, ValueError):
    pass


class DomainError(MsProfileError, ValueError):
    """A query outside the domain of the object (e.g. arc length past the end)."""


class WaypointParseError(MsProfileError, ValueError):
    """Waypoint file could not be parsed.

    ``location`` is the 1-based CSV line number or the 0-based GeoJSON
    position index that failed.
    """

    def __init__(self, message: str, location: int | None = None):
        super().__init__(message)
        self.location = location


class NonFiniteInputError(MsProfileError, ValueError):
    pass


class NLPEvaluationError(MsProfileError, FloatingPointError):
    """An objective or constraint evaluator returned NaN."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class MissionInfeasibleError(MsProfileError):
    """A receding-horizon step could not find a feasible plan."""

    def __init__(self, message: str, station: float):
        super().__init__(message)
        self.station = station


class SolverFailureError(MsProfileError):
    def __init__(self, message: str, station: float | None = None):
        super().__init__(message)
        self.station = station
