"""Numerical checks of the two kernel identities behind the inversion formulas.

* Log kernel (2D): for x != y in E,
  ``int log||x-p|^2 - |y-p|^2| dS_E(p) = 2 pi log|A(x-y)| + C`` with C
  independent of x, y.  C is estimated here and compared with
  ``2 * int_{-pi}^{pi} log|sin(t/2)| dt`` obtained by adaptive quadrature.
* Delta kernel (3D): ``int delta(|x-p|^2 - |y-p|^2) dS_E(p) = pi / |A(x-y)|``,
  checked by replacing delta with a Gaussian mollifier of width eps and
  extrapolating eps -> 0.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .exceptions import UsageError
from .geometry import a_norm, boundary_quadrature, contains

__all__ = [
    "LemmaReport",
    "reference_log_constant",
    "lemma31_constant",
    "lemma31_report",
    "mollifier",
    "richardson",
    "auto_resolution",
    "lemma32_sum",
    "lemma32_check",
    "lemma32_report",
    "plane_offset",
    "random_interior_pairs",
    "ErrorMetrics",
    "error_metrics",
]


@dataclass
class LemmaReport:
    """Per-sample records plus a summary; serialises to text and JSON."""

    name: str
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "records": self.records, "summary": self.summary}

    def to_json(self):
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(obj["name"], obj["records"], obj["summary"])

    def to_text(self):
        lines = [f"name: {self.name}"]
        for key in sorted(self.summary):
            lines.append(f"summary.{key}: {_fmt(self.summary[key])}")
        lines.append(f"records: {len(self.records)}")
        for i, rec in enumerate(self.records):
            for key in sorted(rec):
                lines.append(f"record.{i}.{key}: {_fmt(rec[key])}")
        return "\n".join(lines) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _fmt(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _check_pair(e, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (e.dim,) or y.shape != (e.dim,):
        raise UsageError(f"x and y must be points in R^{e.dim}")
    if np.array_equal(x, y):
        raise UsageError("x and y must differ: log|A(x - y)| is undefined at x = y")
    return x, y


_REFERENCE_C = None


def reference_log_constant():
    """``2 * int_{-pi}^{pi} log|sin(t/2)| dt`` by adaptive quadrature (cached)."""
    global _REFERENCE_C
    if _REFERENCE_C is None:
        half, _ = quad(lambda t: math.log(math.sin(0.5 * t)), 0.0, math.pi,
                       epsabs=1e-14, epsrel=1e-13, limit=200)
        _REFERENCE_C = 2.0 * (2.0 * half)
    return _REFERENCE_C


def lemma31_constant(e, x, y, n=2**18):
    """``sum_j w_j log||x-p_j|^2 - |y-p_j|^2| - 2 pi log|A(x-y)|`` with n trapezoid nodes.

    The integrand has two logarithmic singularities on the boundary, so the
    trapezoid rule converges only slowly; large ``n`` is expected.  A
    singularity falling exactly on a node gets the value
    ``log(|s'(theta_j)| h / (2 pi))``, which is what makes the punctured
    trapezoid sum of ``log|2 sin((theta - theta_j)/2)|`` exact.
    """
    if e.dim != 2:
        raise UsageError("the log-kernel identity is two-dimensional")
    if n < 2**14:
        raise UsageError(f"n must be at least 2**14, got {n}")
    x, y = _check_pair(e, x, y)
    bq = boundary_quadrature(e, n)
    p = bq.nodes
    # |x-p|^2 - |y-p|^2 = |x|^2 - |y|^2 - 2 p.(x - y), symmetric under x <-> y up to sign
    s = (x @ x - y @ y) - 2.0 * (p @ (x - y))
    # zero up to rounding: cancellation leaves |s| at the eps level of its terms
    size = x @ x + y @ y + 2.0 * e.max_axis * float(np.linalg.norm(x - y))
    hit = np.abs(s) <= 64.0 * np.finfo(float).eps * size
    with np.errstate(divide="ignore"):
        vals = np.log(np.abs(s))
    if np.any(hit):
        dp = np.column_stack([-e.axes[0] * np.sin(bq.params), e.axes[1] * np.cos(bq.params)])
        slope = np.abs(2.0 * (dp[hit] @ (x - y)))
        vals[hit] = np.log(slope * (2.0 * np.pi / n) / (2.0 * np.pi))
    return float(np.sum(bq.weights * vals) - 2.0 * np.pi * math.log(a_norm(e, x - y)))


def lemma31_report(e, pairs, n=2**18):
    c_ref = reference_log_constant()
    records = []
    for x, y in pairs:
        c = lemma31_constant(e, x, y, n)
        rhs_log = 2.0 * np.pi * math.log(a_norm(e, np.subtract(x, y)))
        records.append({
            "x": list(map(float, x)),
            "y": list(map(float, y)),
            "lhs": c + rhs_log,
            "rhs": rhs_log + c_ref,
            "constant": c,
            "deviation": c - c_ref,
        })
    consts = np.array([r["constant"] for r in records])
    summary = {
        "n": int(n),
        "reference_constant": c_ref,
        "mean_constant": float(consts.mean()) if consts.size else float("nan"),
        "spread": float(consts.max() - consts.min()) if consts.size else float("nan"),
        "max_abs_deviation": float(np.max(np.abs(consts - c_ref))) if consts.size else float("nan"),
    }
    return LemmaReport("log-kernel identity (2D)", records, summary)


def mollifier(s, eps):
    """Gaussian approximate identity ``exp(-s^2/eps^2) / (eps sqrt(pi))``."""
    return np.exp(-(np.asarray(s) / eps) ** 2) / (eps * math.sqrt(math.pi))


def richardson(eps, values):
    """Extrapolate ``values(eps)`` to ``eps = 0`` assuming an expansion in ``eps**2``.

    Neville's scheme on the polynomial through ``(eps_i**2, values_i)``.
    """
    h = np.asarray(eps, dtype=float) ** 2
    t = np.array(values, dtype=float)
    n = len(t)
    for k in range(1, n):
        for i in range(n - 1, k - 1, -1):
            t[i] = (h[i - k] * t[i] - h[i] * t[i - 1]) / (h[i - k] - h[i])
    return float(t[-1])


def _product_rule_chunks(e, n_theta, n_phi, rows=64):
    """Boundary product rule (same nodes as ``boundary_quadrature``) in phi-row blocks."""
    theta = -np.pi + 2.0 * np.pi * np.arange(n_theta) / n_theta
    w_theta = 2.0 * np.pi / n_theta
    z, w_z = np.polynomial.legendre.leggauss(n_phi)
    ct, st = np.cos(theta), np.sin(theta)
    for i in range(0, n_phi, rows):
        zz = z[i:i + rows]
        sp = np.sqrt(1.0 - zz * zz)[:, None]
        nodes = np.stack(
            [e.axes[0] * sp * ct, e.axes[1] * sp * st,
             np.broadcast_to(e.axes[2] * zz[:, None], (len(zz), n_theta))],
            axis=-1,
        )
        yield nodes, (w_z[i:i + rows] * w_theta)[:, None]


def auto_resolution(e, x, y, eps_min):
    """Product-rule size resolving the mollified band of width ~eps_min / |A(x-y)|.

    The band ``|x-p|^2 - |y-p|^2 = O(eps)`` is a plane section of the
    boundary.  In the unit-sphere parameters its width is about
    ``eps / (2 sqrt(2) |A(x-y)|)``; the theta direction only sees the
    in-plane part of ``A(x-y)``.  Node spacing is kept below that width.
    """
    v = np.asarray(e.a) * (np.asarray(x) - np.asarray(y))
    b = float(np.linalg.norm(v))
    b12 = float(np.linalg.norm(v[:2]))
    n_phi = max(64, int(np.ceil(8.0 * b / eps_min)))
    n_theta = max(64, 2 * int(np.ceil(8.0 * b12 / eps_min)))
    return n_theta, n_phi


def lemma32_sum(e, x, y, eps, bq=None, n_theta=None, n_phi=None):
    """Mollified boundary integral of ``delta(|x-p|^2 - |y-p|^2)``.

    ``eps`` may be a sequence; one sum is returned per value.  Either an
    explicit ``bq`` or the product-rule sizes are used.
    """
    eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
    c = x @ x - y @ y
    xy = x - y
    if bq is not None:
        chunks = [(bq.nodes, bq.weights)]
    else:
        chunks = _product_rule_chunks(e, n_theta, n_phi)
    totals = np.zeros(eps_arr.size)
    for nodes, w in chunks:
        s = c - 2.0 * (nodes @ xy)
        for k, ep in enumerate(eps_arr):
            totals[k] += np.sum(w * mollifier(s, ep))
    return float(totals[0]) if np.ndim(eps) == 0 else totals


def lemma32_check(e, x, y, eps_list=(0.08, 0.04, 0.02), n_theta=None, n_phi=None, bq=None):
    """Mollified sums for each eps and their extrapolation, against ``pi / |A(x-y)|``.

    Without ``bq`` or explicit sizes the product rule is sized by
    :func:`auto_resolution` for the smallest eps.
    """
    if e.dim != 3:
        raise UsageError("the delta-kernel identity is three-dimensional")
    x, y = _check_pair(e, x, y)
    eps_list = [float(v) for v in eps_list]
    if len(eps_list) < 3:
        raise UsageError("need at least three eps values to extrapolate")
    if any(v <= 0 for v in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise UsageError("eps_list must be positive and strictly decreasing")
    if bq is None:
        auto = auto_resolution(e, x, y, eps_list[-1])
        n_theta = auto[0] if n_theta is None else n_theta
        n_phi = auto[1] if n_phi is None else n_phi
        n_nodes = n_theta * n_phi
    else:
        n_nodes = bq.size
    target = math.pi / a_norm(e, x - y)
    sums = lemma32_sum(e, x, y, eps_list, bq=bq, n_theta=n_theta, n_phi=n_phi)
    extrap = richardson(eps_list, sums)
    records = [
        {"x": x.tolist(), "y": y.tolist(), "eps": eps, "lhs": float(v), "rhs": target,
         "deviation": (float(v) - target) / target}
        for eps, v in zip(eps_list, sums)
    ]
    summary = {
        "target": target,
        "extrapolated": extrap,
        "relative_deviation": (extrap - target) / target,
        "n_nodes": int(n_nodes),
    }
    return LemmaReport("delta-kernel identity (3D)", records, summary)


def lemma32_report(e, pairs, eps_list=(0.08, 0.04, 0.02), n_theta=None, n_phi=None):
    records = []
    for x, y in pairs:
        rep = lemma32_check(e, x, y, eps_list, n_theta=n_theta, n_phi=n_phi)
        records.append({
            "x": list(map(float, x)),
            "y": list(map(float, y)),
            "lhs": rep.summary["extrapolated"],
            "rhs": rep.summary["target"],
            "deviation": rep.summary["relative_deviation"],
            "raw": [r["lhs"] for r in rep.records],
            "n_nodes": rep.summary["n_nodes"],
        })
    devs = np.array([abs(r["deviation"]) for r in records])
    summary = {
        "eps": list(eps_list),
        "mean_abs_relative_deviation": float(devs.mean()) if devs.size else float("nan"),
        "max_abs_relative_deviation": float(devs.max()) if devs.size else float("nan"),
    }
    return LemmaReport("delta-kernel identity (3D)", records, summary)


def plane_offset(e, x, y):
    """``| |x|^2 - |y|^2 | / (2 |A(x-y)|)``; strictly below 1 for x != y in E."""
    x, y = _check_pair(e, x, y)
    return abs(x @ x - y @ y) / (2.0 * a_norm(e, x - y))


def random_interior_pairs(e, n, rng, margin=0.05, min_anorm=0.1):
    """``n`` pairs of points uniform in ``(1 - margin) E`` with ``|A(x-y)| >= min_anorm``."""
    pairs = []
    while len(pairs) < n:
        x, y = rng.uniform(-1.0, 1.0, (2, e.dim)) * e.a
        if contains(e, x, margin) and contains(e, y, margin) and a_norm(e, x - y) >= min_anorm:
            pairs.append((x, y))
    return pairs


@dataclass(frozen=True)
class ErrorMetrics:
    rel_l2: float
    rel_linf: float
    max_abs_error: float
    max_abs_truth: float
    n_points: int

    def to_dict(self):
        return {
            "rel_l2": self.rel_l2,
            "rel_linf": self.rel_linf,
            "max_abs_error": self.max_abs_error,
            "max_abs_truth": self.max_abs_truth,
            "n_points": self.n_points,
        }


def error_metrics(recon, truth, e, margin=0.05):
    """Relative L2 / Linf error of a reconstruction over grid nodes in ``(1 - margin) E``."""
    pts = recon.grid.points()
    mask = contains(e, pts, margin)
    if not np.any(mask):
        raise UsageError("no grid nodes fall inside the mask")
    ref = np.asarray(truth(pts[mask]), dtype=float)
    err = recon.values.ravel()[mask] - ref
    ref_l2 = float(np.linalg.norm(ref))
    ref_inf = float(np.max(np.abs(ref)))
    if ref_inf == 0.0:
        raise UsageError("degenerate truth: reference is identically zero over the mask")
    return ErrorMetrics(
        rel_l2=float(np.linalg.norm(err)) / ref_l2,
        rel_linf=float(np.max(np.abs(err))) / ref_inf,
        max_abs_error=float(np.max(np.abs(err))),
        max_abs_truth=ref_inf,
        n_points=int(mask.sum()),
    )
