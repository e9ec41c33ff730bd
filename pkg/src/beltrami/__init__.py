"""Spectral Neumann-series solver for the Beltrami equation f_zbar = mu f_z on a
periodic grid, with numerical checks of the regularity, area distortion and
factorization estimates for maps of exponentially integrable distortion."""

from .coefficients import (BeltramiCoefficient, DistortionField, RadialProfile, alpha_profile,
                           bad_set_measure, exp_integral, gp_profile, radial_to_coefficient,
                           stretch_profile, truncate)
from .field import ComplexField, Grid, RegionMask, l2_norm, measure
from .neumann import NeumannRun, PrincipalSolution, contour_term, decay_report, solve, solve_lambda, step
from .transforms import SpectralPlan, beurling, cauchy

__all__ = [
    "BeltramiCoefficient", "ComplexField", "DistortionField", "Grid", "NeumannRun", "PrincipalSolution",
    "RadialProfile", "RegionMask", "SpectralPlan", "alpha_profile", "bad_set_measure", "beurling",
    "cauchy", "contour_term", "decay_report", "exp_integral", "gp_profile", "l2_norm", "measure",
    "radial_to_coefficient", "solve", "solve_lambda", "step", "stretch_profile", "truncate",
]
