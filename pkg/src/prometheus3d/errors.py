"""Exception types raised across the tracking pipeline."""


class PrometheusError(Exception):
    """Base class for all pipeline errors."""


class DegenerateConfigurationError(PrometheusError):
    """Camera rig cannot support three-view geometry (collinear centers)."""


class UnstableTransferError(PrometheusError):
    """Trifocal point transfer is rank-deficient for this input."""


class ParallelRaysError(PrometheusError):
    """All viewing rays are parallel; triangulation is undefined."""


class TooShortTrajectoryError(PrometheusError):
    """Trajectory has fewer samples than the operation requires."""


class DimensionMismatchError(PrometheusError):
    """Images or masks do not share the expected dimensions."""


class ParameterValidationError(PrometheusError):
    """A parameter block violates its invariants."""


class FrameRangeMismatchError(PrometheusError):
    """Mask sequences do not cover the same frame range."""


class DegeneratePartitionError(PrometheusError):
    """A graph partition side has zero total association weight."""


class EigensolverNonconvergenceError(PrometheusError):
    """The spectral solver failed to reach the residual tolerance."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class EmptyGroundTruthError(PrometheusError):
    """Evaluation was asked to score against an empty ground truth."""


class ConfigError(PrometheusError):
    """Config file could not be parsed or contains unknown keys."""
