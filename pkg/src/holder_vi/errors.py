"""Exception types shared across the package."""


class HolderVIError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HolderVIError):
    """Invalid configuration value, problem string, or CLI argument."""


class EvaluationError(HolderVIError):
    """Operator returned a non-finite value or a wrongly shaped array."""


class SubproblemFailure(HolderVIError):
    """Inner solver could not reach the requested residual tolerance."""


class LineSearchExhausted(HolderVIError):
    """Doubling search hit max_doublings without satisfying the criterion."""


class DegenerateRegularization(HolderVIError):
    """Prox step requested with a nonpositive regularization coefficient."""


class UnboundedGapError(HolderVIError):
    """Gap certificate requested over a set with no finite support point."""


class RateFitError(HolderVIError):
    """Too few usable (K, gap) pairs to fit a convergence slope."""


class UnsupportedOrder(HolderVIError):
    """Derivative order not available for this operator."""
