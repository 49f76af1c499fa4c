"""Spherical mean transform with centers on an ellipse or ellipsoid.

Forward acquisition, the log-kernel (2D) and delta-kernel (3D) inversions,
and numerical checks of the kernel identities they rest on.
"""

from .estimators import Inverter2D, Inverter3D, SphericalMeanTransform
from .exceptions import ConfigError, HypothesisError, NumericError, UsageError
from .fields import Grid, Grid2, Grid3, ScalarField, aniso_laplacian
from .forward import RadialGrid, SmtData, add_noise, sample_smt, sphere_rule, spherical_mean
from .geometry import (BoundaryQuadrature, Ellipsoid, Pose, a_image, a_norm, boundary_point,
                       boundary_quadrature, contains, denormalize_pose, normalize_pose,
                       sphere_measure)
from .phantom import Phantom, Term, bump, gaussian, gaussian_smt_oracle, support_check
from .radial import UniformCubic, radial_spline
from .recon2d import aniso_laplacian2, backproject2, invert2, log_radial_integral
from .recon3d import aniso_laplacian3, backproject3, delta_radial_reduce, invert3
from .validation import (ErrorMetrics, LemmaReport, error_metrics, lemma31_constant,
                         lemma31_report, lemma32_check, lemma32_report, mollifier,
                         reference_log_constant, richardson)

__version__ = "0.1.0"
