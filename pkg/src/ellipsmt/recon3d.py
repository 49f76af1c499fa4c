"""Inversion from spherical means centred on an ellipsoid (delta kernel).

The radial integral against ``delta(r^2 - d^2)`` collapses analytically:
on ``r > 0`` we have ``delta(r^2 - d^2) = delta(r - d) / (2 d)``, hence

    int_0^inf r^2 g(r) delta(r^2 - d^2) dr = (d / 2) g(d).

The potential ``u(x) = 1/(4 pi^2) sum_j w_j (d_j / 2) g_j(d_j)`` with
``d_j = |x - p_j|`` is then differentiated by the anisotropic Laplacian and
negated.  As in 2D, ``-L u = f / (a1 a2 a3)``, so the default output is
scaled by the determinant of ``A``.
"""

import numpy as np

from ._validation import check_count
from .exceptions import UsageError
from .fields import Grid, ScalarField, aniso_laplacian
from .radial import radial_spline
from .recon2d import _backproject, _check_pair

__all__ = ["delta_radial_reduce", "backproject3", "aniso_laplacian3", "invert3"]


def delta_radial_reduce(h, d):
    """``(d / 2) * h(d)`` for a radial spline ``h`` and ``d > 0``."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0.0):
        raise UsageError("the delta reduction needs a strictly positive distance")
    return 0.5 * d_arr * h(d_arr)


def backproject3(data, grid, n_workers=1, extrapolate_origin=False):
    """Delta-kernel backprojection ``u(x)`` at every node of ``grid`` (ghosts included)."""
    _check_pair(data, grid, 3)
    h = radial_spline(data.g, data.rg, extrapolate_origin=extrapolate_origin)

    def kernel(dist):
        return 0.5 * dist * h.at_pairs(dist)

    u = _backproject(kernel, data.bq.weights, data.bq.nodes, grid, n_workers)
    return ScalarField(grid, u / (4.0 * np.pi**2))


def aniso_laplacian3(u, e, a3_exponent=2):
    """``sum_i a_i^-2 d^2u/dx_i^2`` on the non-ghost nodes.

    ``a3_exponent=3`` swaps the last coefficient for ``a3^-3``; it exists only
    to demonstrate that this variant of the operator does not invert the data.
    """
    if e.dim != 3 or u.grid.dim != 3:
        raise UsageError("aniso_laplacian3 needs a 3D field and ellipsoid")
    a3_exponent = check_count(a3_exponent, "a3_exponent", 2)
    coeffs = 1.0 / e.a**2
    coeffs[2] = e.axes[2] ** -a3_exponent
    return aniso_laplacian(u, coeffs)


def invert3(data, grid, n_workers=1, jacobian=True, a3_exponent=2, return_potential=False):
    """Recover ``f`` on the interior of ``grid`` from data on the ellipsoid."""
    e = data.ellipsoid
    if not isinstance(grid, Grid):
        grid = Grid.covering(e, grid)
    u = backproject3(data, grid, n_workers=n_workers)
    lap = aniso_laplacian3(u, e, a3_exponent=a3_exponent)
    scale = -e.det if jacobian else -1.0
    f = lap.map(lambda v: scale * v)
    return (f, u) if return_potential else f
