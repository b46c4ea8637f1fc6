"""Delaunay tessellation field estimator and kernel intensity estimators."""

from .analytic import (QuadratureSpec, bd_moments_poisson, dtfe_asymptotic_variance_1d,
                       dtfe_mean_1d_poisson, dtfe_second_moment_1d_poisson,
                       dtfe_variance_1d_poisson, kernelk_mean_poisson,
                       kernelk_variance_poisson, phi_plus_minus_cdfs)
from .errors import (ConfigError, DegenerateInput, DomainError, DTFEError, InvalidBound,
                     InvalidRate, QuadratureFailure, TooFewPoints)
from .estimators import (IntensityEstimate, KernelParams, berman_diggle, dtfe_evaluate,
                         dtfe_field, kernel_K, total_mass)
from .geometry import (PointPattern, Tessellation, Window, build_delaunay, locate_cell,
                       shared_contiguous_volume, validate_general_position)
from .montecarlo import (ExperimentSpec, MomentReport, efficiency_crossover, estimate_C,
                         estimate_Cprime, estimate_cd, palm_statistics, run_experiment)
from .pointprocess import (IntensityFunction, affine_intensity, constant_intensity,
                           sample_homogeneous_poisson, sample_inhomogeneous_poisson,
                           sample_poisson)
from .special import exp_integral_E1, exp_integral_E2

__version__ = "0.1.0"
