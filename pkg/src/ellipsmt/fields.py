"""Uniform Cartesian grids over the ellipsoid's bounding box and fields on them."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_count, frozen
from .exceptions import UsageError

__all__ = ["Grid", "Grid2", "Grid3", "ScalarField", "aniso_laplacian"]


@dataclass(frozen=True, eq=False)
class Grid:
    """Node-centred grid ``x_i = lower + i * spacing``, ``i = 0..shape-1`` per axis."""

    lower: np.ndarray
    spacing: np.ndarray
    shape: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lower = frozen(np.ravel(self.lower))
        spacing = frozen(np.ravel(self.spacing))
        if not (len(shape) == lower.size == spacing.size) or np.any(spacing <= 0):
            raise UsageError("inconsistent grid definition")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def covering(cls, e, shape):
        """Grid whose interior spans ``[-a_i, a_i]`` with one ghost node on each side."""
        shape = tuple(shape) if np.ndim(shape) else (shape,) * e.dim
        if len(shape) != e.dim:
            raise UsageError(f"grid shape needs {e.dim} entries, got {len(shape)}")
        shape = tuple(check_count(n, "grid size", 5) for n in shape)
        spacing = np.array([2.0 * a / (n - 3) for a, n in zip(e.axes, shape)])
        return cls(-e.a - spacing, spacing, shape)

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def axis(self, i):
        return self.lower[i] + self.spacing[i] * np.arange(self.shape[i])

    def axes(self):
        return [self.axis(i) for i in range(self.dim)]

    def points(self):
        """All nodes as an (size, dim) array in C (row-major) order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def interior(self):
        """The grid with its outer ring of nodes removed."""
        if min(self.shape) < 3:
            raise UsageError("grid too small to have an interior")
        return Grid(self.lower + self.spacing, self.spacing, tuple(n - 2 for n in self.shape))

    def same_as(self, other):
        return (
            self.shape == other.shape
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.spacing, other.spacing)
        )


# The 2D and 3D grids share one implementation.
Grid2 = Grid
Grid3 = Grid


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise UsageError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", frozen(values))

    def map(self, fn):
        return ScalarField(self.grid, fn(self.values))


def aniso_laplacian(u, coeffs):
    """Second-order central-difference ``sum_i coeffs[i] * d^2u/dx_i^2``.

    Returned on ``u.grid.interior()``: the stencil needs both neighbours.
    """
    grid = u.grid
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (grid.dim,):
        raise UsageError(f"need {grid.dim} coefficients, got {coeffs.shape}")
    if min(grid.shape) < 5:
        raise UsageError(f"grid {grid.shape} too small for the Laplacian stencil (need >= 5)")
    v = u.values
    core = tuple(slice(1, -1) for _ in range(grid.dim))
    out = np.zeros(tuple(n - 2 for n in grid.shape))
    for i in range(grid.dim):
        lo = list(core)
        hi = list(core)
        lo[i] = slice(0, -2)
        hi[i] = slice(2, None)
        second = (v[tuple(hi)] - 2.0 * v[core] + v[tuple(lo)]) / grid.spacing[i] ** 2
        out += coeffs[i] * second
    return ScalarField(grid.interior(), out)
