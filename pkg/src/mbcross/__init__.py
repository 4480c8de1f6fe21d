"""Exact distributions of crossing counts in continuous-time Markov branching processes."""
from .closed_form import (bd_death_coeffs, bd_extinction_series, bd_pgf, bd_roots,
                          cubic_death_coeffs, cubic_extinction_series)
from .engine import (IntegrationError, OdeSettings, extinction_conditioned_coeffs, joint_coeffs,
                     marginal_coeffs, marginal_coeffs_integral, pgf_from_state_i, solve_G)
from .law import (CrossingSet, LawError, OffspringLaw, B_eval, make_crossing_set, make_law,
                  phi_coefficients, phi_eval)
from .rng import RandomStream
from .roots import RootError, leftmost_root, rho_plain, rho_taylor, rho_weighted
from .series import CoeffTable, MultiIndex, Truncation, convolve, convolve_power
from .sim import EmpiricalTable, PathRecord, estimate_extinction, monte_carlo, simulate_path
from .validate import expected_tv, mc_z_report, total_variation, uniformization_dist

__all__ = [
    "B_eval", "CoeffTable", "CrossingSet", "EmpiricalTable", "IntegrationError", "LawError",
    "MultiIndex", "OdeSettings", "OffspringLaw", "PathRecord", "RandomStream", "RootError",
    "Truncation", "bd_death_coeffs", "bd_extinction_series", "bd_pgf", "bd_roots", "convolve",
    "convolve_power", "cubic_death_coeffs", "cubic_extinction_series", "estimate_extinction",
    "expected_tv", "extinction_conditioned_coeffs", "joint_coeffs", "leftmost_root",
    "make_crossing_set", "make_law", "marginal_coeffs", "marginal_coeffs_integral", "mc_z_report",
    "monte_carlo", "pgf_from_state_i", "phi_coefficients", "phi_eval", "rho_plain", "rho_taylor",
    "rho_weighted", "simulate_path", "solve_G", "total_variation", "uniformization_dist",
]
