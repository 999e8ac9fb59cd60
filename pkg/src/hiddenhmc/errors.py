"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DomainError(ValueError):
    """Raised when a point lies outside the open unit ball."""


class TrainingError(FloatingPointError):
    """Raised when optimization hits a non-finite gradient or loss."""


class CheckpointVersionError(ValueError):
    """Raised when a checkpoint carries an unknown format tag."""
