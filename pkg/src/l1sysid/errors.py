"""Exception types raised across the package."""


class InvalidDimensionError(ValueError):
    """Array shapes or problem sizes are inconsistent."""


class InvalidSparsityError(ValueError):
    """Requested more outliers than there are observations."""


class InvalidParameterError(ValueError):
    """A numeric parameter lies outside its admissible range."""


class InvalidInputError(ValueError):
    """An argument violates an operation's precondition (e.g. a zero direction)."""


class InvalidWitnessError(ValueError):
    """A direction passed as a failure witness does not violate balancedness."""


class RankDeficiencyError(ValueError):
    """The observation matrix does not have full column rank."""


class NonConvergenceError(RuntimeError):
    """The simplex hit its pivot cap. ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EnumerationLimitError(RuntimeError):
    """A combinatorial certification request exceeds the configured budget."""


class DegenerateSupportError(RuntimeError):
    """Every sign pattern on a support yields an infeasible normalisation."""
