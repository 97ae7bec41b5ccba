"""Exception and warning types shared across the package."""


class AsianSpectralError(Exception):
    """Base class for package errors."""


class PoleError(AsianSpectralError, ValueError):
    """Argument sits on a pole of the gamma function."""


class ConvergenceError(AsianSpectralError, ArithmeticError):
    """A series, quadrature or truncation did not reach the requested tolerance."""


class TailBoundError(ConvergenceError):
    """Truncated tail of a spectral or contour integral exceeds tolerance."""


class GridResolutionError(AsianSpectralError, ValueError):
    """A sampling grid is too coarse to resolve the integrand."""


class UnderflowWarning(RuntimeWarning):
    """A result underflowed to zero in double precision."""


class SmallTauWarning(UserWarning):
    """Spectral convergence is slow because sigma**2 * t is small."""
