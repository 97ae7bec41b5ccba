"""Spectral-expansion pricing of continuously averaged arithmetic Asian options."""

from .errors import (
    AsianSpectralError,
    ConvergenceError,
    GridResolutionError,
    PoleError,
    SmallTauWarning,
    TailBoundError,
    UnderflowWarning,
)
from .kernel import KernelPoint, QuadratureSpec, completeness_defect, eigenfunction, heat_kernel
from .laplace import BromwichSpec, bromwich_oracle, inv_laplace_bessel
from .mc import MCConfig, MCEstimate, estimate, parity_residual
from .pricing import (
    DimensionlessParams,
    MarketParams,
    SpectralPrice,
    call_price,
    discrete_term_count,
    discrete_terms_crosscheck,
    moment_check,
    pricing_kernel,
    put_price,
    to_dimensionless,
)

__version__ = "0.1.0"

__all__ = [
    "AsianSpectralError", "ConvergenceError", "GridResolutionError", "PoleError",
    "SmallTauWarning", "TailBoundError", "UnderflowWarning",
    "KernelPoint", "QuadratureSpec", "completeness_defect", "eigenfunction", "heat_kernel",
    "BromwichSpec", "bromwich_oracle", "inv_laplace_bessel",
    "MCConfig", "MCEstimate", "estimate", "parity_residual",
    "DimensionlessParams", "MarketParams", "SpectralPrice", "call_price", "discrete_term_count",
    "discrete_terms_crosscheck", "moment_check", "pricing_kernel", "put_price", "to_dimensionless",
]
