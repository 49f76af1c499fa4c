"""Cubic splines on uniform radial nodes, one per boundary node.

All rows share the knots ``0, dr, ..., K*dr`` so that a batch of splines can
be evaluated at *different* abscissae per row by a single gather.
"""

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import UsageError

__all__ = ["UniformCubic", "radial_spline"]


class UniformCubic:
    """A stack of cubic splines ``s_j`` on the uniform knots ``x_k = k * step``.

    Parameters
    ----------
    values : array, shape (J, N) or (N,)
        Samples at the knots, one row per spline.
    step : float
        Knot spacing.
    bc_type :
        Passed to :class:`scipy.interpolate.CubicSpline`; ``"even"`` pins a
        zero slope at the origin with a not-a-knot far end.
    outside : float or None
        Value returned beyond the last knot.  ``None`` extrapolates the last
        polynomial piece.
    """

    def __init__(self, values, step, bc_type="natural", outside=0.0):
        values = np.asarray(values, dtype=float)
        self.single = values.ndim == 1
        values = np.atleast_2d(values)
        if values.shape[1] < 4:
            raise UsageError("a cubic spline needs at least 4 samples")
        self.step = float(step)
        self.n = values.shape[1]
        self.rows = values.shape[0]
        self.outside = outside
        knots = np.arange(self.n) * self.step
        if bc_type == "even":
            bc_type = ((1, np.zeros(self.rows)), "not-a-knot")
        cs = CubicSpline(knots, values, axis=1, bc_type=bc_type)
        # PPoly coefficients: (4, n-1, J) -> (4, J, n-1) for row-local gathers
        self.coef = np.ascontiguousarray(np.transpose(cs.c, (0, 2, 1)))
        self.end = knots[-1]

    def _locate(self, x):
        idx = np.floor(x / self.step).astype(np.intp)
        np.clip(idx, 0, self.n - 2, out=idx)
        return idx, x - idx * self.step

    def __call__(self, x):
        """Evaluate every row at the same abscissae; returns (J, len(x))."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any(x < 0.0):
            raise UsageError("radial splines are defined for r >= 0 only")
        idx, t = self._locate(x)
        c = self.coef[:, :, idx]
        out = ((c[0] * t + c[1]) * t + c[2]) * t + c[3]
        if self.outside is not None:
            out[:, x > self.end] = self.outside
        if self.single:
            out = out[0]
            return float(out[0]) if scalar else out
        return out[:, 0] if scalar else out

    def at_pairs(self, x):
        """Evaluate row ``j`` at ``x[..., j]``; ``x`` has trailing dimension J."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.rows:
            raise UsageError(f"expected trailing dimension {self.rows}, got {x.shape}")
        idx, t = self._locate(x)
        rows = np.broadcast_to(np.arange(self.rows), x.shape)
        out = self.coef[0][rows, idx]
        for m in (1, 2, 3):
            out = out * t + self.coef[m][rows, idx]
        if self.outside is not None:
            out = np.where(x > self.end, self.outside, out)
        return out


def radial_spline(samples, rg, extrapolate_origin=False):
    """Natural cubic spline through ``(r_k, g[k])`` on the radial grid, zero past ``r_max``.

    ``samples`` may be one row (K+1,) or a matrix (J, K+1) for a batch.
    With ``extrapolate_origin`` the ``r = 0`` sample is replaced by the cubic
    extrapolation of the next four, for data that are singular at the origin.
    """
    samples = np.array(samples, dtype=float)
    if samples.shape[-1] != rg.K + 1:
        raise UsageError(f"expected {rg.K + 1} radial samples, got {samples.shape[-1]}")
    if extrapolate_origin:
        s = samples[..., 1:5]
        samples[..., 0] = 4.0 * s[..., 0] - 6.0 * s[..., 1] + 4.0 * s[..., 2] - s[..., 3]
    return UniformCubic(samples, rg.dr, bc_type="natural", outside=0.0)
