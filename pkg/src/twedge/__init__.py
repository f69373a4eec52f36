"""Edge statistics of elliptical sample covariance matrices.

Deterministic edge quantities of the Marchenko-Pastur law for a discrete
population spectrum, samplers for elliptical data and GOE matrices, and
Monte Carlo drivers comparing the largest eigenvalues with Tracy-Widom.
"""
from .errors import TwEdgeError
from .model import (
    ComplexPoint,
    ModelSpec,
    PopulationSpectrum,
    RadiusLaw,
    builtin_model,
    builtin_sigma,
    make_population_spectrum,
)
from .mp_law import EdgeParams, density, edge_params, find_c, solve_m, validate_conditions
from .sampler import RngStream, sample_data_matrix, sample_goe
from .spectral import SpectralSample, gram_eigenvalues, onatski_statistic, rescale_largest

__version__ = "0.1.0"

__all__ = [
    "ComplexPoint",
    "EdgeParams",
    "ModelSpec",
    "PopulationSpectrum",
    "RadiusLaw",
    "RngStream",
    "SpectralSample",
    "TwEdgeError",
    "builtin_model",
    "builtin_sigma",
    "density",
    "edge_params",
    "find_c",
    "gram_eigenvalues",
    "make_population_spectrum",
    "onatski_statistic",
    "rescale_largest",
    "sample_data_matrix",
    "sample_goe",
    "solve_m",
    "validate_conditions",
]
