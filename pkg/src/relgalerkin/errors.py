"""Exception types raised across the package."""


class RelGalerkinError(Exception):
    """Base class for all package errors."""


class CapacityError(RelGalerkinError):
    """Requested truncation exceeds the configured mode budget."""


class ResolutionError(RelGalerkinError):
    """Collocation grid is too coarse for the retained modes."""


class DomainMismatchError(RelGalerkinError, ValueError):
    """Objects built on different domains/spectra were combined."""


class SymbolError(RelGalerkinError, ValueError):
    """A spectral multiplier is not finite on a retained eigenvalue."""


class ParameterError(RelGalerkinError, ValueError):
    """A parameter lies outside the range an operation accepts."""


class GeometryError(RelGalerkinError, ValueError):
    """A cut-off or centre does not fit inside the box."""


class NumericalBlowupError(RelGalerkinError, FloatingPointError):
    """NaN or inf appeared during an iteration."""


class DegeneracyError(RelGalerkinError):
    """Limit solution is numerically degenerate (tiny smallest singular value)."""


class InvertibilityError(RelGalerkinError):
    """A linear operator that should be invertible is numerically singular."""


class DivergenceError(RelGalerkinError):
    """Fixed-point iteration failed to contract."""


class ToleranceError(RelGalerkinError):
    """A quadrature did not reach its requested tolerance."""
