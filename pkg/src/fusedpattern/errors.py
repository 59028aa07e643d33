"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Malformed vectors, mismatched dimensions, too-short sequences."""


class InvalidPartitionError(InvalidInputError):
    """Block list does not form a contiguous partition with distinct neighbours."""


class InvalidParameterError(ValueError):
    """A tuning or noise parameter is out of its admissible range."""


class SingularityError(ValueError):
    """A closed-form inverse does not exist for the supplied entries."""


class RankDeficiencyError(ValueError):
    """A Gram matrix that must be invertible is not."""


class InvalidSetupError(ValueError):
    """An experiment was requested under conditions that defeat its purpose."""


class ConvergenceError(RuntimeError):
    """Iterative solver hit its cap before certifying optimality."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual
