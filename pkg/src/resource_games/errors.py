"""Exception hierarchy shared by every module."""


class ResourceGamesError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ResourceGamesError, ValueError):
    """Malformed numerical input: wrong shape, non-finite, not Hermitian, not PSD..."""


class NotTraceNonincreasingError(InvalidInputError):
    pass


class CompletionInfeasibleError(ResourceGamesError):
    """The reference channel minus the partial instrument is not completely positive."""


class MalformedProgramError(ResourceGamesError, ValueError):
    pass


class SolverError(ResourceGamesError):
    """The conic solver did not reach an optimal, certified point."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedFreeSetError(ResourceGamesError):
    pass


class DegenerateWitnessError(ResourceGamesError):
    """A witness is zero, so no separating game can be built from it."""


class PreconditionError(ResourceGamesError):
    pass


class MalformedJSONError(InvalidInputError):
    """A JSON document is missing a field or has one of the wrong type; the message names both."""
