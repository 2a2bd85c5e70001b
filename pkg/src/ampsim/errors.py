"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible domain."""


class ShapeError(ValueError):
    """Array dimensions are not conformable."""


class NumericError(FloatingPointError):
    """A non-finite value was supplied or produced."""


class DivergenceError(NumericError):
    """An iteration produced non-finite values.

    ``iteration`` is the index at which the blow-up was detected and
    ``partial`` holds whatever trajectory was recorded before it.
    """

    def __init__(self, iteration, partial=None, message=None):
        self.iteration = iteration
        self.partial = partial
        super().__init__(message or f"non-finite values at iteration {iteration}")


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


class ExperimentError(RuntimeError):
    """Too many trials diverged for the aggregates to be meaningful."""
