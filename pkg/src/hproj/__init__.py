"""Projection geometry on conformal planes of non-positive curvature."""
from .errors import (BudgetError, ConfigError, ConvergenceError, DomainError, ExtentError, FitError,
                     HprojError, TruncationError)
from .metric import ConformalMetric, christoffel, curvature, g_norm, metric_inner
from .geodesic import GeodesicPath, TangentVector, distance, exp_map, log_map, shoot
from .projection import (LinePencil, ProjectionResult, d2pi_dtheta2, dpi_dtheta, eps_scan, pi_theta, project,
                         small_scale_slope, theta_perp)
from .fractal import CellSet, IFSSpec, Similarity, box_dimension_estimate, frostman_check, generate, similarity_dimension
from .experiment import (EnergyEstimate, MarstrandReport, ProjectedMeasure, fourier_energy, marstrand_report,
                         measure_spectrum, project_set)

__version__ = "0.1.0"
