"""
Kloosterman symmetric-power L-functions: exact finite-field pipeline, p-adic
Frobenius on the Bessel family, and Fredholm determinants on the
kappa-symmetric-power space.
"""
from .padic import (ConfigurationError, NonUnitError, PadicElem, PrecisionError,
                    PrecisionProfile, Valuation)
from .series import OmegaSeries
from .exact import FqField, CycElem, kloosterman_sum, l_sym_k_coeffs, newton_polygon
from .bessel import FrobMatrix2, fiber_trace_check, frobenius_matrix_rel, theta_coeffs
from .sym import KappaValue, LSeriesPadic, kernel_dim, l_sym_inf, l_unit, finite_sym_check

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "NonUnitError", "PrecisionError", "PadicElem", "PrecisionProfile",
    "Valuation", "OmegaSeries", "FqField", "CycElem", "kloosterman_sum", "l_sym_k_coeffs",
    "newton_polygon", "FrobMatrix2", "fiber_trace_check", "frobenius_matrix_rel",
    "theta_coeffs", "KappaValue", "LSeriesPadic", "kernel_dim", "l_sym_inf", "l_unit",
    "finite_sym_check",
]
