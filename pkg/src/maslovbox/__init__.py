"""Counting eigenvalues of singular Hamiltonian systems with Maslov boxes."""

from .counter import (CountRequest, count_eigenvalues, count_via_nullity_sum,
                      maslov_box, trace_spectral_curves,
                      triangle_decomposition_check)
from .endpoints import classify_endpoint, niessen_eigen_probe
from .errors import AssumptionError, ConfigError, MaslovBoxError, NumericalError
from .greens import assemble, greens_kernel, solve_inhomogeneous
from .maslov import maslov_index_path, w_tilde
from .model import HamiltonianSystem, check_assumptions
from .problems import build_setup, hydrogen_setup, mhd_setup
from .propagator import IntegratorConfig, fundamental_matrix

__all__ = [
    "AssumptionError", "ConfigError", "CountRequest", "HamiltonianSystem",
    "IntegratorConfig", "MaslovBoxError", "NumericalError", "assemble",
    "build_setup", "check_assumptions", "classify_endpoint",
    "count_eigenvalues", "count_via_nullity_sum", "fundamental_matrix",
    "greens_kernel", "hydrogen_setup", "maslov_box", "maslov_index_path",
    "mhd_setup", "niessen_eigen_probe", "solve_inhomogeneous",
    "trace_spectral_curves", "triangle_decomposition_check", "w_tilde",
]
