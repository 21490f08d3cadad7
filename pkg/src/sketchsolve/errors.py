"""Exception types shared across the library."""


class SketchSolveError(Exception):
    """Base class for all library errors."""


class InvalidInput(SketchSolveError):
    """Malformed or out-of-range argument."""


class DegenerateDistribution(SketchSolveError):
    """A length-square distribution has no probability mass (all weights zero)."""


class NumericalInstability(SketchSolveError):
    """An operation would divide by a singular value below the retention threshold."""


class RefusedAtScale(SketchSolveError):
    """A dense materialization was requested above the configured size limit."""


class SamplerStalled(SketchSolveError):
    """A rejection sampler exceeded its trial cap."""


class InternalInvariantViolation(SketchSolveError):
    """A mathematically guaranteed bound was violated; indicates a bug."""


class EmptyUserHistory(SketchSolveError):
    """The requested user row contains no ratings."""


class UndefinedMetric(SketchSolveError):
    """An error metric has no valid entries to average over."""
