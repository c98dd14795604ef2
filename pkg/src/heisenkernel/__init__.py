"""Heat kernels and Carnot-Caratheodory distances on Heisenberg groups H(K, A)."""

__version__ = "0.1.0"

from .errors import AccuracyError, DomainError, HeisenkernelError, RegimeError
from .group_model import FullPoint, GroupSignature, RadialPoint, dilate, reduce_point, reflect_t, signature_preset
from .geometry import Branch, GeodesicData, cc_distance, mu, mu_inv, mu_inv_complement, solve_geodesic
from .phase import Height, phase_frame
from .quadrature_kernel import (KernelValue, Method, kernel, kernel_contour, kernel_convolution, kernel_direct,
                                kernel_shifted)
from .asymptotics import (Regime, RegimeTag, Thresholds, classify, cutlocus_leading, leading, small_time,
                          thm1_leading, thm2_leading, thm3_leading)
from .bessel_core import VParams, bessel_I, plancherel_lhs, plancherel_rhs
from .bounds import Comparator, grad_log, grad_log_check, log_comparator, sandwich_sweep

__all__ = [
    "__version__", "AccuracyError", "DomainError", "HeisenkernelError", "RegimeError",
    "FullPoint", "GroupSignature", "RadialPoint", "dilate", "reduce_point", "reflect_t", "signature_preset",
    "Branch", "GeodesicData", "cc_distance", "mu", "mu_inv", "mu_inv_complement", "solve_geodesic",
    "Height", "phase_frame",
    "KernelValue", "Method", "kernel", "kernel_contour", "kernel_convolution", "kernel_direct", "kernel_shifted",
    "Regime", "RegimeTag", "Thresholds", "classify", "cutlocus_leading", "leading", "small_time",
    "thm1_leading", "thm2_leading", "thm3_leading",
    "VParams", "bessel_I", "plancherel_lhs", "plancherel_rhs",
    "Comparator", "grad_log", "grad_log_check", "log_comparator", "sandwich_sweep",
]
