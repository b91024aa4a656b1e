"""Exception types shared across the engine."""


class PursuitError(Exception):
    """Base class for all engine errors."""


class InvalidPathError(PursuitError):
    """A path violates the continuity or formatting rules."""


class NotApplicableError(PursuitError):
    """An operation's preconditions do not hold for the given input."""


class VerificationError(PursuitError):
    """A certificate or internal invariant failed re-validation."""
