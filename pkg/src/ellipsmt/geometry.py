"""Ellipse/ellipsoid acquisition geometry.

The standard solid ellipsoid is ``E = {x : sum(x_i**2 / a_i**2) <= 1}``.  Its
boundary carries the measure ``dS_E`` obtained by pulling back the unit-sphere
measure through the parametrisation

    2D:  p(theta)      = (a1 cos theta, a2 sin theta),             dS_E = dtheta
    3D:  p(theta, phi) = (a1 sin phi cos theta, a2 sin phi sin theta, a3 cos phi),
         dS_E = sin phi dtheta dphi

so the total mass is 2*pi (2D) or 4*pi (3D).  This is *not* Euclidean surface
area; quadrature weights never carry the surface Jacobian.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_margin, check_point, check_points, frozen
from .exceptions import UsageError

__all__ = [
    "Ellipsoid",
    "BoundaryQuadrature",
    "Pose",
    "boundary_point",
    "boundary_quadrature",
    "a_image",
    "a_norm",
    "contains",
    "normalize_pose",
    "denormalize_pose",
    "sphere_measure",
]


def sphere_measure(dim):
    """Total mass of the unit sphere S^{dim-1}: 2*pi or 4*pi."""
    return 2.0 * np.pi if dim == 2 else 4.0 * np.pi


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipse (dim 2) or ellipsoid (dim 3) centred at the origin."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(float(a) for a in np.ravel(self.axes))
        if len(axes) not in (2, 3):
            raise UsageError(f"only dim 2 or 3 is supported, got {len(axes)} axes")
        if not all(np.isfinite(a) and a > 0.0 for a in axes):
            raise UsageError(f"axes must be strictly positive, got {axes}")
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def a(self):
        return np.asarray(self.axes)

    @property
    def det(self):
        """Determinant of the diagonal scaling ``A = diag(a)``."""
        return float(np.prod(self.axes))

    @property
    def max_axis(self):
        return max(self.axes)


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    """Nodes on the boundary with weights integrating against ``dS_E``."""

    ellipsoid: Ellipsoid
    nodes: np.ndarray
    weights: np.ndarray
    params: np.ndarray
    shape: tuple = field(default=())

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        """Apply the rule to samples ``values[j]`` taken at ``nodes[j]``."""
        values = np.asarray(values, dtype=float)
        return float(np.sum(self.weights * values))


@dataclass(frozen=True, eq=False)
class Pose:
    """Placement of a general ellipsoid: ``x_world = rotation @ x_std + center``."""

    center: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        rotation = np.asarray(self.rotation, dtype=float)
        dim = center.shape[0]
        if center.ndim != 1 or rotation.shape != (dim, dim):
            raise UsageError("rotation must be a dim x dim matrix matching center")
        err = np.max(np.abs(rotation.T @ rotation - np.eye(dim)))
        if err > 1e-12:
            raise UsageError(f"rotation is not orthogonal (|Q^T Q - I| = {err:.3g})")
        object.__setattr__(self, "center", frozen(center))
        object.__setattr__(self, "rotation", frozen(rotation))

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.eye(dim))


def boundary_point(e, params):
    """Point of the boundary at parameter ``theta`` (2D) or ``(theta, phi)`` (3D).

    ``params`` may also be an array of shape (n,) / (n, 2) to get n points.
    """
    params = np.asarray(params, dtype=float)
    a = e.a
    if e.dim == 2:
        if params.ndim == 0 or (params.ndim == 1 and params.shape[0] == 1):
            theta = float(params.reshape(-1)[0])
            return np.array([a[0] * np.cos(theta), a[1] * np.sin(theta)])
        if params.ndim == 1:
            return np.column_stack([a[0] * np.cos(params), a[1] * np.sin(params)])
        if params.ndim == 2 and params.shape[1] == 1:
            return boundary_point(e, params[:, 0])
        raise UsageError("a 2D boundary point takes exactly one angle")
    if params.shape[-1:] != (2,) or params.ndim > 2:
        raise UsageError("a 3D boundary point takes exactly two angles (theta, phi)")
    theta, phi = params[..., 0], params[..., 1]
    sp = np.sin(phi)
    pts = np.stack(
        [a[0] * sp * np.cos(theta), a[1] * sp * np.sin(theta), a[2] * np.cos(phi)],
        axis=-1,
    )
    return pts


def boundary_quadrature(e, n_theta, n_phi=None):
    """Product rule for integration against ``dS_E``.

    2D uses the periodic trapezoid rule on ``[-pi, pi)`` with weights
    ``2*pi/n_theta``.  3D takes the trapezoid rule in theta times
    Gauss-Legendre in ``cos(phi)``, which absorbs the ``sin(phi) dphi`` factor.
    Nodes are ordered phi-major in 3D: node ``i * n_theta + k`` has
    ``phi_i`` and ``theta_k``.
    """
    n_theta = check_count(n_theta, "n_theta", 4)
    theta = -np.pi + 2.0 * np.pi * np.arange(n_theta) / n_theta
    w_theta = np.full(n_theta, 2.0 * np.pi / n_theta)
    if e.dim == 2:
        params = theta[:, None]
        nodes = boundary_point(e, theta)
        weights = w_theta
        shape = (n_theta,)
    else:
        if n_phi is None:
            raise UsageError("3D boundary quadrature requires n_phi")
        n_phi = check_count(n_phi, "n_phi", 4)
        # descending cos(phi) so that phi increases from the north pole
        z, w_z = np.polynomial.legendre.leggauss(n_phi)
        z, w_z = z[::-1], w_z[::-1]
        phi = np.arccos(z)
        params = np.column_stack(
            [np.tile(theta, n_phi), np.repeat(phi, n_theta)]
        )
        nodes = boundary_point(e, params)
        # pin the polar coordinate to the exact GL abscissa
        nodes[:, 2] = e.axes[2] * np.repeat(z, n_theta)
        weights = np.outer(w_z, w_theta).ravel()
        shape = (n_phi, n_theta)
    return BoundaryQuadrature(
        ellipsoid=e,
        nodes=frozen(nodes),
        weights=frozen(weights),
        params=frozen(params),
        shape=shape,
    )


def a_image(e, v):
    """Componentwise scaling ``A v = (a_1 v_1, ..., a_n v_n)``; works on stacks."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != e.dim:
        raise UsageError(f"vector must have {e.dim} components, got shape {v.shape}")
    return v * e.a


def a_norm(e, v):
    """Euclidean norm of ``A v``."""
    img = a_image(e, v)
    # hypot does not underflow for tiny v
    out = np.hypot.reduce(img, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def contains(e, x, margin=0.0):
    """True where ``sum(x_i**2 / a_i**2) <= (1 - margin)**2``.

    Accepts a single point or an (n, dim) stack (returns a boolean array).
    """
    margin = check_margin(margin)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != e.dim:
        raise UsageError(f"point must have {e.dim} components, got shape {x.shape}")
    level = np.sum((x / e.a) ** 2, axis=-1)
    inside = level <= (1.0 - margin) ** 2
    return bool(inside) if np.ndim(inside) == 0 else inside


def normalize_pose(pose, x):
    """Map world coordinates to the standard frame: ``Q^T (x - c)``."""
    dim = pose.center.shape[0]
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = check_point(X, dim)
        return pose.rotation.T @ (X - pose.center)
    X = check_points(X, dim)
    return (X - pose.center) @ pose.rotation


def denormalize_pose(pose, x):
    """Inverse of :func:`normalize_pose`: ``Q x + c``."""
    dim = pose.center.shape[0]
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = check_point(X, dim)
        return pose.rotation @ X + pose.center
    X = check_points(X, dim)
    return X @ pose.rotation.T + pose.center
