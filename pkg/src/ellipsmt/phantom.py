"""Smooth test functions supported inside the ellipsoid.

Two term kinds are available:

``bump``
    ``amplitude * exp(-1 / (1 - t**2))`` for ``t = |shape * (y - center)| / scale < 1``
    and 0 otherwise.  Infinitely differentiable with compact support.
``gaussian``
    ``amplitude * exp(-|y - center|**2 / scale**2)``.  Not compactly supported,
    but its spherical means have a closed form, which makes it the reference
    case for checking the forward quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._validation import check_margin, check_positive, frozen
from .exceptions import UsageError
from .geometry import contains, normalize_pose

__all__ = [
    "Term",
    "Phantom",
    "bump",
    "gaussian",
    "support_check",
    "gaussian_smt_oracle",
    "bessel_i0",
]

KINDS = ("bump", "gaussian")
GAUSSIAN_TAIL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Term:
    kind: str
    center: np.ndarray
    scale: float
    amplitude: float = 1.0
    shape: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown phantom term kind {self.kind!r}; use one of {KINDS}")
        center = np.asarray(self.center, dtype=float).reshape(-1)
        if center.shape[0] not in (2, 3):
            raise UsageError(f"term center must have 2 or 3 components, got {center.shape[0]}")
        shape = np.ones_like(center) if self.shape is None else np.asarray(self.shape, dtype=float)
        if shape.shape != center.shape or np.any(shape <= 0.0):
            raise UsageError("term shape must be a positive vector matching the center")
        if self.kind == "gaussian" and not np.all(shape == 1.0):
            raise UsageError("gaussian terms are isotropic; shape must be all ones")
        object.__setattr__(self, "center", frozen(center))
        object.__setattr__(self, "shape", frozen(shape))
        object.__setattr__(self, "scale", check_positive(self.scale, "scale"))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def dim(self):
        return self.center.shape[0]

    def __call__(self, Y):
        diff = Y - self.center
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-np.sum(diff * diff, axis=-1) / self.scale**2)
        t2 = np.sum((diff * self.shape) ** 2, axis=-1) / self.scale**2
        out = np.zeros(t2.shape)
        inside = t2 < 1.0
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - t2[inside]))
        return out

    def on_spheres(self, x, radii, dirs):
        """Values at ``x + r * w`` for every radius r and direction w; shape (R, M).

        Expands ``|S(x - c) + r S w|^2`` so only (R, M) temporaries are formed.
        """
        b = (x - self.center) * self.shape
        sd = dirs * self.shape
        quad = np.sum(sd * sd, axis=1)
        lin = 2.0 * (sd @ b)
        rr = radii[:, None]
        t2 = (b @ b + rr * (rr * quad[None, :] + lin[None, :])) / self.scale**2
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-t2)
        out = np.zeros(t2.shape)
        inside = t2 < 1.0
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - t2[inside]))
        return out


def bump(center, scale, amplitude=1.0, shape=None):
    return Term("bump", center, scale, amplitude, shape)


def gaussian(center, scale, amplitude=1.0):
    return Term("gaussian", center, scale, amplitude)


@dataclass(frozen=True, eq=False)
class Phantom:
    """A finite sum of bump/gaussian terms, evaluable on stacks of points."""

    terms: tuple
    dim: int = None

    def __post_init__(self):
        terms = tuple(self.terms)
        dims = {t.dim for t in terms}
        if self.dim is None:
            if len(dims) != 1:
                raise UsageError("cannot infer dimension; pass dim= for an empty phantom")
            dim = dims.pop()
        else:
            dim = int(self.dim)
            if dims - {dim}:
                raise UsageError(f"all terms must be {dim}-dimensional")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", dim)

    def eval(self, y):
        """Evaluate at a point (returns float) or an (..., dim) array of points."""
        Y = np.asarray(y, dtype=float)
        if Y.shape[-1] != self.dim:
            raise UsageError(f"points must have {self.dim} components, got shape {Y.shape}")
        out = np.zeros(Y.shape[:-1])
        for term in self.terms:
            out = out + term(Y)
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def on_spheres(self, x, radii, dirs):
        out = np.zeros((len(radii), len(dirs)))
        for term in self.terms:
            out = out + term.on_spheres(x, radii, dirs)
        return out

    def translated(self, v):
        v = np.asarray(v, dtype=float)
        return Phantom(
            tuple(Term(t.kind, t.center + v, t.scale, t.amplitude, t.shape) for t in self.terms),
            dim=self.dim,
        )

    def __add__(self, other):
        return Phantom(self.terms + other.terms, dim=self.dim)

    def in_frame(self, pose):
        """The phantom expressed in the standard frame of a posed ellipsoid.

        Centers map through ``Q^T (c - center)``.  Axis-aligned bump shapes
        survive only rotations that permute axes (up to sign); any other
        rotation requires isotropic terms.
        """
        Q = pose.rotation
        perm = np.abs(np.rint(Q))
        is_perm = np.array_equal(np.abs(Q), perm) and np.all(perm.sum(axis=0) == 1)
        terms = []
        for t in self.terms:
            if is_perm:
                shape = perm.T @ t.shape
            elif np.all(t.shape == t.shape[0]):
                shape = t.shape
            else:
                raise UsageError(
                    "an anisotropic bump cannot be rotated by a pose that does not permute axes"
                )
            terms.append(Term(t.kind, normalize_pose(pose, t.center), t.scale, t.amplitude, shape))
        return Phantom(tuple(terms), dim=self.dim)


def _max_level_over_ball(b, m):
    """max over |u| <= 1 of |b + diag(m) u|^2, via the trust-region secular equation.

    With ``mu = lambda - max(m^2)`` the maximiser is ``u_i = m_i b_i / (mu + gap_i)``,
    ``gap_i = max(m^2) - m_i^2``, and ``mu`` solves ``sum (m_i b_i)^2 / (mu + gap_i)^2 = 1``.
    The root lies in ``[sqrt(S_top), sqrt(S_all)]`` where the sums run over the
    dominant directions and over all directions.
    """
    b = np.asarray(b, dtype=float)
    m2 = np.asarray(m, dtype=float) ** 2
    top = m2.max()
    gap = top - m2
    is_top = np.isclose(m2, top, rtol=1e-14, atol=0.0)
    gap[is_top] = 0.0
    mb2 = m2 * b * b
    s_top = float(np.sum(mb2[is_top]))
    rest = ~is_top

    if s_top == 0.0:
        at_top = np.sum(mb2[rest] / gap[rest] ** 2) if rest.any() else 0.0
        if at_top <= 1.0:
            # hard case: slack goes into the dominant directions
            u = np.zeros_like(b)
            u[rest] = np.sqrt(m2[rest]) * b[rest] / gap[rest]
            tau2 = max(0.0, 1.0 - np.sum(u * u))
            val = np.sum((b[rest] + np.sqrt(m2[rest]) * u[rest]) ** 2)
            return float(val + np.sum(b[is_top] ** 2) + top * tau2)

    live = mb2 > 0.0

    def secular(mu):
        return np.sum(mb2[live] / (mu + gap[live]) ** 2) - 1.0

    # with s_top = 0 the lower end is 0, where the secular function is at_top - 1 > 0
    lo, hi = np.sqrt(s_top), np.sqrt(float(np.sum(mb2)))
    if hi <= lo or secular(hi) >= 0.0:
        mu = hi
    elif secular(lo) <= 0.0:
        mu = lo
    else:
        mu = brentq(secular, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    u = np.sqrt(m2) * b / (mu + gap)
    return float(np.sum((b + np.sqrt(m2) * u) ** 2))


def support_check(ph, e, margin=0.0):
    """True iff every term of ``ph`` is supported in ``(1 - margin) E``.

    Bump supports are ellipsoids ``{|shape * (y - c)| <= scale}``; the largest
    value of ``sum(y_i**2 / a_i**2)`` over such a set is found exactly.
    Gaussian terms pass when the center lies in ``(1 - margin) E`` and the
    term is below 1e-12 everywhere on the boundary.
    """
    margin = check_margin(margin)
    if ph.dim != e.dim:
        raise UsageError(f"phantom is {ph.dim}D but the ellipsoid is {e.dim}D")
    limit = (1.0 - margin) ** 2
    for term in ph.terms:
        if term.kind == "bump":
            level = _max_level_over_ball(term.center / e.a, term.scale / (e.a * term.shape))
            if level > limit:
                return False
        else:
            if not contains(e, term.center, margin):
                return False
            # distance from an interior point to the boundary is at least (1 - rho) * min(a)
            rho = math.sqrt(np.sum((term.center / e.a) ** 2))
            dist = (1.0 - rho) * min(e.axes)
            if abs(term.amplitude) * math.exp(-(dist / term.scale) ** 2) > GAUSSIAN_TAIL_TOL:
                return False
    return True


def bessel_i0(z):
    """Modified Bessel function I_0 for z >= 0, scaled form ``I_0(z) * exp(-z)``."""
    z = float(z)
    if z < 0.0:
        raise UsageError("bessel_i0 expects a non-negative argument")
    if z <= 20.0:
        q = 0.25 * z * z
        term, total, k = 1.0, 1.0, 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total * math.exp(-z)
    # large-argument expansion; terms shrink until k ~ 2z, far past double precision
    term, total, k = 1.0, 1.0, 0
    while abs(term) > 1e-17 * total:
        k += 1
        term *= (2 * k - 1) ** 2 / (8.0 * k * z)
        total += term
    return total / math.sqrt(2.0 * math.pi * z)


def gaussian_smt_oracle(dim, center, scale, x, r):
    """Closed-form spherical mean of ``exp(-|y - center|**2 / scale**2)``.

    Integration is against the unnormalised unit-sphere measure, so ``r = 0``
    returns ``2*pi`` or ``4*pi`` times the point value.
    """
    sigma = check_positive(scale, "scale")
    r = float(r)
    if r < 0.0:
        raise UsageError("radius must be non-negative")
    q = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(center, dtype=float)))
    s2 = sigma * sigma
    if dim == 3:
        if q * r / s2 < 1e-6:
            z = 2.0 * q * r / s2
            sinhc = 1.0 + z * z / 6.0 + z**4 / 120.0
            return 4.0 * math.pi * math.exp(-(q * q + r * r) / s2) * sinhc
        return (math.pi * s2 / (q * r)) * (
            math.exp(-((q - r) ** 2) / s2) - math.exp(-((q + r) ** 2) / s2)
        )
    if dim == 2:
        z = 2.0 * q * r / s2
        return 2.0 * math.pi * math.exp(-((q - r) ** 2) / s2) * bessel_i0(z)
    raise UsageError(f"dim must be 2 or 3, got {dim}")
