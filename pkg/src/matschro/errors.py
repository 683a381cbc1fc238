"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid grid, potential or run configuration."""


class FactorizationError(ValueError):
    """The potential violates V1 >= |V2| at some node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SingularityError(ValueError):
    """Spectral parameter too close to the threshold for a direct kernel."""


class DomainError(ValueError):
    """Argument outside the range where an expansion or formula is valid."""


class NearEigenvalueError(RuntimeError):
    """M(z) (or another dense operator) is numerically singular."""

    def __init__(self, message, z=None, cond=None):
        super().__init__(message)
        self.z = z
        self.cond = cond


class DegenerateProjectionError(ValueError):
    """Projection onto (a, b) is undefined because the potential vanishes."""


class ThresholdInconsistencyError(RuntimeError):
    """The computed kernel of QTQ contradicts the rank bound dim S1 <= 1."""


class ResonanceError(RuntimeError):
    """Resonance constants c0 and c1 both vanish."""


class ResolutionError(ValueError):
    """Grid too coarse or too narrow for the requested check."""


class PrecisionError(RuntimeError):
    """Quadrature refinements failed to agree."""


class FitError(ValueError):
    """Power-law fit could not be performed on the given series."""
