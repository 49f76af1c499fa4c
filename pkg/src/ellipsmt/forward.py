"""Numerical spherical mean transform and acquisition on the boundary.

``(Rf)(x, r)`` integrates ``f`` over the sphere of radius ``r`` about ``x``
against the *unnormalised* unit-sphere measure.  Data are collected for
centers on the boundary quadrature nodes and radii on a uniform grid.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_count, check_point, check_positive, frozen
from .exceptions import UsageError
from .geometry import sphere_measure

__all__ = [
    "RadialGrid",
    "SmtData",
    "sphere_rule",
    "spherical_mean",
    "sample_smt",
    "add_noise",
]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radii ``r_k = k * r_max / K`` for ``k = 0..K``."""

    r_max: float
    K: int

    def __post_init__(self):
        object.__setattr__(self, "r_max", check_positive(self.r_max, "r_max"))
        object.__setattr__(self, "K", check_count(self.K, "K", 8))

    @classmethod
    def for_ellipsoid(cls, e, K):
        """Smallest safe cutoff: spheres about boundary points meeting E have r <= 2 max(a)."""
        return cls(2.0 * e.max_axis, K)

    @property
    def dr(self):
        return self.r_max / self.K

    @property
    def nodes(self):
        return np.arange(self.K + 1) * self.dr


@dataclass(frozen=True, eq=False)
class SmtData:
    """Samples ``g[j, k] ~ (Rf)(p_j, r_k)`` on boundary nodes x radii."""

    ellipsoid: object
    bq: object
    rg: RadialGrid
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape != (self.bq.size, self.rg.K + 1):
            raise UsageError(
                f"data shape {g.shape} does not match ({self.bq.size}, {self.rg.K + 1})"
            )
        if self.bq.ellipsoid != self.ellipsoid:
            raise UsageError("boundary quadrature belongs to a different ellipsoid")
        object.__setattr__(self, "g", frozen(g))

    @property
    def dim(self):
        return self.ellipsoid.dim

    def with_values(self, g):
        return SmtData(self.ellipsoid, self.bq, self.rg, g)

    def __add__(self, other):
        return self.with_values(self.g + other.g)

    def __mul__(self, c):
        return self.with_values(float(c) * self.g)

    __rmul__ = __mul__


def sphere_rule(dim, m_theta, m_phi=None):
    """Directions and weights on the unit sphere.

    2D: periodic trapezoid over ``[0, 2*pi)``.  3D: trapezoid in theta times
    Gauss-Legendre in ``cos(phi)``.  Weights sum to the sphere measure.
    """
    m_theta = check_count(m_theta, "m_theta", 8)
    alpha = 2.0 * np.pi * np.arange(m_theta) / m_theta
    w_alpha = np.full(m_theta, 2.0 * np.pi / m_theta)
    if dim == 2:
        return np.column_stack([np.cos(alpha), np.sin(alpha)]), w_alpha
    if dim != 3:
        raise UsageError(f"dim must be 2 or 3, got {dim}")
    if m_phi is None:
        raise UsageError("3D spherical means require m_phi")
    m_phi = check_count(m_phi, "m_phi", 4)
    z, w_z = np.polynomial.legendre.leggauss(m_phi)
    s = np.sqrt(1.0 - z * z)
    dirs = np.stack(
        [
            np.outer(s, np.cos(alpha)),
            np.outer(s, np.sin(alpha)),
            np.repeat(z[:, None], m_theta, axis=1),
        ],
        axis=-1,
    ).reshape(-1, 3)
    return dirs, np.outer(w_z, w_alpha).ravel()


def spherical_mean(f, x, r, m_theta=256, m_phi=128):
    """``(Rf)(x, r)`` for an evaluator ``f`` accepting (..., dim) point arrays.

    ``r`` may be a scalar or a 1D array of radii.  ``r = 0`` returns the sphere
    measure times ``f(x)`` exactly.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    x = check_point(x, dim)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0.0):
        raise UsageError("radius must be non-negative")
    dirs, w = sphere_rule(dim, m_theta, m_phi)
    out = _sphere_sums(f, x, r_arr, dirs, w)
    return float(out[0]) if np.ndim(r) == 0 else out


def _sphere_sums(f, x, radii, dirs, w):
    if hasattr(f, "on_spheres"):
        vals = f.on_spheres(x, radii, dirs)
    else:
        pts = x + radii[:, None, None] * dirs[None, :, :]
        vals = np.asarray(f(pts), dtype=float).reshape(len(radii), len(w))
    out = np.sum(vals * w, axis=1)
    zero = radii == 0.0
    if np.any(zero):
        out[zero] = sphere_measure(len(x)) * float(np.asarray(f(x)))
    return out


def _reach(f, p):
    """Radius interval outside which the sphere about ``p`` misses supp f, if known."""
    terms = getattr(f, "terms", None)
    if terms is None or any(t.kind != "bump" for t in terms):
        return None
    if not terms:
        return (np.inf, -np.inf)
    lo, hi = np.inf, -np.inf
    for t in terms:
        q = float(np.linalg.norm(p - t.center))
        rad = t.scale / float(np.min(t.shape))
        lo, hi = min(lo, q - rad), max(hi, q + rad)
    return lo, hi


def sample_smt(f, e, bq, rg, m_theta=None, m_phi=None, n_workers=1):
    """Acquire ``g[j, k] = (Rf)(p_j, r_k)`` for every boundary node and radius.

    ``m_theta`` defaults to four times the boundary resolution in theta, and
    ``m_phi`` to four times ``n_phi`` in 3D.  Each entry is an independent
    fixed-order sum, so the result does not depend on ``n_workers``.  For
    phantoms made of bumps, radii whose sphere cannot reach a support are
    set to exactly zero without evaluating ``f``.
    """
    if bq.ellipsoid != e:
        raise UsageError("boundary quadrature was built for a different ellipsoid")
    if rg.r_max < 2.0 * e.max_axis * (1.0 - 1e-12):
        raise UsageError(f"r_max must be at least 2*max(axes) = {2.0 * e.max_axis}")
    n_theta = bq.shape[-1]
    if m_theta is None:
        m_theta = 4 * n_theta
    if e.dim == 3 and m_phi is None:
        m_phi = 4 * bq.shape[0]
    dirs, w = sphere_rule(e.dim, m_theta, m_phi)
    radii = rg.nodes

    def row(j):
        p = bq.nodes[j]
        out = np.zeros(len(radii))
        reach = _reach(f, p)
        if reach is None:
            active = np.ones(len(radii), dtype=bool)
        else:
            active = (radii >= reach[0]) & (radii <= reach[1])
        if np.any(active):
            out[active] = _sphere_sums(f, p, radii[active], dirs, w)
        if radii[0] == 0.0:
            out[0] = sphere_measure(e.dim) * float(np.asarray(f(p)))
        return out

    n_workers = check_count(n_workers, "n_workers", 1)
    if n_workers == 1:
        rows = [row(j) for j in range(bq.size)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(row, range(bq.size)))
    g = np.vstack(rows) if rows else np.zeros((0, len(radii)))
    return SmtData(e, bq, rg, g)


def add_noise(data, level, seed):
    """Add Gaussian noise of standard deviation ``level * max|g|`` to acquired data."""
    level = float(level)
    if level < 0.0:
        raise UsageError("noise level must be non-negative")
    if level == 0.0:
        return data
    rng = np.random.default_rng(seed)
    scale = level * float(np.max(np.abs(data.g))) if data.g.size else 0.0
    return data.with_values(data.g + scale * rng.standard_normal(data.g.shape))
