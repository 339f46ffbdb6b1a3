"""Exception types shared across the package."""


class EstimationError(Exception):
    """Base class for every error raised by this package."""


class ModelValidationError(EstimationError, ValueError):
    """Inputs violate a model or frame invariant (bad auxiliaries, bad shapes)."""


class DegenerateFrameError(EstimationError):
    """The frame has too few sampled or unsampled units for the requested operation."""


class DivergenceUndefinedError(EstimationError):
    """A covariance (or covariance mixture) required by a divergence is not positive definite."""

    def __init__(self, matrix_name: str, detail: str = ""):
        self.matrix_name = matrix_name
        msg = f"matrix {matrix_name!r} is not positive definite"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
