"""Exception hierarchy shared by all floydlab modules."""


class FloydLabError(Exception):
    """Base class for every error raised by floydlab."""


class SpecParseError(FloydLabError, ValueError):
    """A ``.fas`` file (or a flag value) could not be parsed."""


class PendingCarryBeyondDepth(FloydLabError):
    """An odometer carry is still propagating at the requested depth."""

    def __init__(self, depth, message=None):
        self.depth = depth
        super().__init__(message or f"carry still pending at depth {depth}")


class DepthInsufficient(FloydLabError):
    """The requested depth does not cover the data that must be examined."""


class YOutsideImage(FloydLabError, ValueError):
    """``invert`` was asked for a point outside the image of [0, 1]."""


class NotNormalizable(FloydLabError):
    """The period contains a level with no identity digit."""


class ScheduleUnavailable(FloydLabError):
    """No admissible level of some role recurs, so no schedule exists."""


class NoAdmissibleTemplate(FloydLabError):
    """A convenient family cannot be built for the requested case."""


class HorizonExceeded(FloydLabError):
    """A bounded search ran past its horizon (inconclusive, not a disproof)."""

    def __init__(self, horizon, message=None):
        self.horizon = horizon
        super().__init__(message or f"search exceeded horizon {horizon}")
