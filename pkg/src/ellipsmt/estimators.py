"""scikit-learn style wrappers around the acquisition and inversion functions.

The functional API is the primary interface; these classes hold the
discretisation parameters so that pipelines can be configured, cloned and
inspected with ``get_params`` / ``set_params``.
"""

from scipy.interpolate import RegularGridInterpolator
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .exceptions import UsageError
from .fields import Grid
from .forward import RadialGrid, SmtData, add_noise, sample_smt
from .geometry import Ellipsoid, boundary_quadrature
from .recon2d import invert2
from .recon3d import invert3

__all__ = ["SphericalMeanTransform", "Inverter2D", "Inverter3D"]


class SphericalMeanTransform(TransformerMixin, BaseEstimator):
    """Acquire spherical means of a phantom on a fixed boundary x radius grid.

    Parameters
    ----------
    axes : tuple of float
        Semi-axes of the standard ellipse or ellipsoid.
    n_theta, n_phi : int
        Boundary rule sizes; ``n_phi`` is required in 3D.
    K : int
        Number of radial cells on ``[0, 2 max(axes)]``.
    m_theta, m_phi : int or None
        Sphere rule sizes for each mean; default to four times the boundary sizes.
    noise, seed :
        Optional relative Gaussian noise added after acquisition.
    n_workers : int
        Threads used over boundary nodes.  Output does not depend on it.
    """

    def __init__(self, axes=(1.3, 0.8), n_theta=256, n_phi=None, K=512,
                 m_theta=None, m_phi=None, noise=0.0, seed=0, n_workers=1):
        self.axes = axes
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.K = K
        self.m_theta = m_theta
        self.m_phi = m_phi
        self.noise = noise
        self.seed = seed
        self.n_workers = n_workers

    def fit(self, X=None, y=None):
        e = Ellipsoid(tuple(self.axes))
        self.ellipsoid_ = e
        self.quadrature_ = boundary_quadrature(e, self.n_theta, self.n_phi if e.dim == 3 else None)
        self.radial_grid_ = RadialGrid.for_ellipsoid(e, self.K)
        return self

    def transform(self, X):
        """``X`` is a phantom (or any evaluator on (..., dim) points); returns SmtData."""
        check_is_fitted(self, "quadrature_")
        data = sample_smt(X, self.ellipsoid_, self.quadrature_, self.radial_grid_,
                          m_theta=self.m_theta, m_phi=self.m_phi, n_workers=self.n_workers)
        return add_noise(data, self.noise, self.seed)


class _Inverter(BaseEstimator):
    _dim = None

    def _invert(self, data, grid):
        raise NotImplementedError

    def fit(self, X, y=None):
        """Reconstruct from ``X`` (an SmtData) on a grid covering the ellipsoid."""
        if not isinstance(X, SmtData):
            raise UsageError(f"expected SmtData, got {type(X).__name__}")
        if X.dim != self._dim:
            raise UsageError(f"{type(self).__name__} needs {self._dim}D data, got {X.dim}D")
        grid = Grid.covering(X.ellipsoid, self.grid)
        f, u = self._invert(X, grid)
        self.ellipsoid_ = X.ellipsoid
        self.potential_ = u
        self.reconstruction_ = f
        return self

    def predict(self, X):
        """Reconstructed values at points ``X`` (n, dim), linearly interpolated; 0 off the grid."""
        check_is_fitted(self, "reconstruction_")
        X = check_points(X, self._dim)
        f = self.reconstruction_
        interp = RegularGridInterpolator(
            f.grid.axes(), f.values, method="linear", bounds_error=False, fill_value=0.0
        )
        return interp(X)

    def transform(self, X):
        """Reconstruction values on the grid for data ``X``."""
        return self.fit(X).reconstruction_.values


class Inverter2D(_Inverter):
    """Log-kernel inversion on a covering grid.

    Parameters
    ----------
    grid : int or tuple of int
        Grid nodes per axis, ghost ring included.
    jacobian : bool
        Multiply by ``a1 a2``; disable only to inspect the unscaled operator.
    refine : int
        Oversampling of the radial-integral lookup table.
    n_workers : int
        Threads over grid points.  Output does not depend on it.
    """

    _dim = 2

    def __init__(self, grid=81, jacobian=True, refine=2, n_workers=1):
        self.grid = grid
        self.jacobian = jacobian
        self.refine = refine
        self.n_workers = n_workers

    def _invert(self, data, grid):
        return invert2(data, grid, n_workers=self.n_workers, jacobian=self.jacobian,
                       refine=self.refine, return_potential=True)


class Inverter3D(_Inverter):
    """Delta-kernel inversion on a covering grid.

    Parameters
    ----------
    grid : int or tuple of int
        Grid nodes per axis, ghost ring included.
    jacobian : bool
        Multiply by ``a1 a2 a3``.
    a3_exponent : int
        Power of ``a3`` in the last Laplacian coefficient (2 is correct).
    n_workers : int
        Threads over grid points.  Output does not depend on it.
    """

    _dim = 3

    def __init__(self, grid=33, jacobian=True, a3_exponent=2, n_workers=1):
        self.grid = grid
        self.jacobian = jacobian
        self.a3_exponent = a3_exponent
        self.n_workers = n_workers

    def _invert(self, data, grid):
        return invert3(data, grid, n_workers=self.n_workers, jacobian=self.jacobian,
                       a3_exponent=self.a3_exponent, return_potential=True)
