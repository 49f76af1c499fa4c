"""Command-line driver: ``ellipsmt <mode> --config run.toml [--out DIR] [--threads N]``.

Modes
-----
forward          acquire spherical means of the configured phantom
invert2d         reconstruct from a 2D data file
invert3d         reconstruct from a 3D data file
roundtrip2d      forward + inversion + error metrics in 2D
roundtrip3d      the same in 3D
validate-lemmas  numerical checks of the log- and delta-kernel identities

Exit status: 0 success, 2 configuration error, 3 phantom outside the
admissible class, 4 non-finite values in a result.
"""

import argparse
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .exceptions import ConfigError, HypothesisError, NumericError, UsageError
from .fields import Grid, ScalarField
from .forward import RadialGrid, add_noise, sample_smt
from .geometry import Ellipsoid, Pose, boundary_quadrature
from .io import (field_to_pgm, read_smt_csv, write_field_csv, write_json, write_pgm,
                 write_smt_csv)
from .phantom import KINDS, Phantom, Term, support_check
from .recon2d import invert2
from .recon3d import invert3
from .validation import (error_metrics, lemma31_report, lemma32_report,
                         random_interior_pairs)

__all__ = ["RunConfig", "parse_config", "load_config", "run", "main", "MODES"]

MODES = ("forward", "invert2d", "invert3d", "roundtrip2d", "roundtrip3d", "validate-lemmas")
EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 2, 3, 4
HYPOTHESIS = "f ∈ C₀∞(E)"


@dataclass(frozen=True)
class Acquisition:
    n_theta: int = 256
    n_phi: int = None
    K: int = 512
    m_theta: int = None
    m_phi: int = None
    noise: float = 0.0


@dataclass(frozen=True)
class Reconstruction:
    grid: tuple = None
    jacobian: bool = True
    a3_exponent: int = 2
    refine: int = 2
    margin: float = 0.05


@dataclass(frozen=True)
class Validation:
    lemma31_axes: tuple = (1.3, 0.8)
    lemma31_pairs: int = 20
    lemma31_n: int = 2**18
    lemma32_axes: tuple = (1.0, 2.0, 3.0)
    lemma32_pairs: int = 10
    eps: tuple = (0.08, 0.04, 0.02)
    min_anorm: float = 0.1
    pair_margin: float = 0.05


@dataclass(frozen=True)
class Tolerances:
    rel_l2: float = None
    rel_linf: float = None
    support_margin: float = 0.02


@dataclass(frozen=True)
class RunConfig:
    mode: str
    axes: tuple = None
    pose: tuple = None
    phantom: tuple = ()
    acquisition: Acquisition = field(default_factory=Acquisition)
    reconstruction: Reconstruction = field(default_factory=Reconstruction)
    validation: Validation = field(default_factory=Validation)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    threads: int = 1
    input: str = None
    output: str = "out"
    pgm: bool = True

    @property
    def dim(self):
        if self.mode.endswith("2d"):
            return 2
        if self.mode.endswith("3d"):
            return 3
        return len(self.axes) if self.axes else None


# -- parsing -----------------------------------------------------------------

_INT, _FLOAT, _BOOL, _STR = "integer", "number", "boolean", "string"
_VEC, _MAT, _INTS = "list of numbers", "matrix of numbers", "integer or list of integers"

SCHEMA = {
    "mode": _STR,
    "seed": _INT,
    "threads": _INT,
    "ellipsoid": {"axes": _VEC},
    "pose": {"center": _VEC, "rotation": _MAT},
    "phantom": [{"kind": _STR, "center": _VEC, "scale": _FLOAT, "amplitude": _FLOAT, "shape": _VEC}],
    "acquisition": {"n_theta": _INT, "n_phi": _INT, "K": _INT, "m_theta": _INT, "m_phi": _INT,
                    "noise": _FLOAT},
    "reconstruction": {"grid": _INTS, "jacobian": _BOOL, "a3_exponent": _INT, "refine": _INT,
                       "margin": _FLOAT},
    "validation": {"lemma31_axes": _VEC, "lemma31_pairs": _INT, "lemma31_n": _INT,
                   "lemma32_axes": _VEC, "lemma32_pairs": _INT, "eps": _VEC, "min_anorm": _FLOAT,
                   "pair_margin": _FLOAT},
    "tolerances": {"rel_l2": _FLOAT, "rel_linf": _FLOAT, "support_margin": _FLOAT},
    "input": {"smt": _STR},
    "output": {"dir": _STR, "pgm": _BOOL},
}


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_value(value, kind, where):
    ok = {
        _INT: lambda v: isinstance(v, int) and not isinstance(v, bool),
        _FLOAT: _is_num,
        _BOOL: lambda v: isinstance(v, bool),
        _STR: lambda v: isinstance(v, str),
        _VEC: lambda v: isinstance(v, list) and all(_is_num(x) for x in v),
        _MAT: lambda v: isinstance(v, list) and all(
            isinstance(r, list) and all(_is_num(x) for x in r) for r in v),
        _INTS: lambda v: (isinstance(v, int) and not isinstance(v, bool)) or (
            isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v)),
    }[kind](value)
    if not ok:
        raise ConfigError(f"expected {kind}, got {value!r}", where)


def _check_tree(tree, schema, where):
    for key, value in tree.items():
        loc = f"{where}.{key}" if where else key
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", loc)
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError("expected a table", loc)
            _check_tree(value, spec, loc)
        elif isinstance(spec, list):
            if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
                raise ConfigError("expected an array of tables ([[...]])", loc)
            for i, item in enumerate(value):
                _check_tree(item, spec[0], f"{loc}[{i}]")
        else:
            _check_value(value, spec, loc)


def _toml(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        msg = str(err)
        line = getattr(err, "lineno", None)
        table = re.search(r"Cannot declare \((.*)\) twice", msg)
        if table:
            name = ".".join(s.strip(" '\"") for s in table.group(1).split(",") if s.strip())
            raise ConfigError(f"duplicate table [{name}]", f"line {line}") from None
        if "Cannot overwrite" in msg and line:
            src = text.splitlines()[line - 1] if line <= len(text.splitlines()) else ""
            key = src.split("=", 1)[0].strip() if "=" in src else "?"
            raise ConfigError(f"duplicate key {key!r}", f"line {line}") from None
        raise ConfigError(f"syntax error: {msg}", f"line {line}" if line else None) from None


def _need(cond, message, where):
    if not cond:
        raise ConfigError(message, where)


def _count(tree, key, where, minimum=1):
    v = tree.get(key)
    if v is not None:
        _need(v >= minimum, f"must be >= {minimum}, got {v}", f"{where}.{key}")
    return v


def parse_config(text, mode=None):
    """Parse TOML text into a :class:`RunConfig`.

    The file must name its ``mode``; a ``mode`` given on the command line
    must agree with it.  Unknown keys, wrong types and out-of-range values
    raise :class:`ConfigError` naming the offending field.
    """
    tree = _toml(text)
    _check_tree(tree, SCHEMA, "")
    file_mode = tree.get("mode")
    if file_mode is None:
        raise ConfigError("mode missing")
    if mode is not None and file_mode != mode:
        raise ConfigError(f"file says {file_mode!r} but the command line says {mode!r}", "mode")
    mode = file_mode
    _need(mode in MODES, f"unknown mode {mode!r}; choose one of {', '.join(MODES)}", "mode")

    axes = tree.get("ellipsoid", {}).get("axes")
    if axes is not None:
        _need(len(axes) in (2, 3) and all(a > 0 for a in axes),
              "needs 2 or 3 positive semi-axes", "ellipsoid.axes")
        axes = tuple(float(a) for a in axes)
    needs_axes = mode in ("forward", "roundtrip2d", "roundtrip3d")
    _need(axes is not None or not needs_axes, f"mode {mode} needs the semi-axes", "ellipsoid.axes")
    want = {"roundtrip2d": 2, "roundtrip3d": 3, "invert2d": 2, "invert3d": 3}.get(mode)
    if want and axes is not None:
        _need(len(axes) == want, f"mode {mode} needs {want} semi-axes, got {len(axes)}",
              "ellipsoid.axes")
    dim = len(axes) if axes is not None else want

    pose = None
    if "pose" in tree:
        p = tree["pose"]
        center = p.get("center", [0.0] * (dim or 0))
        rotation = p.get("rotation", np.eye(dim or 0).tolist())
        _need(dim is not None and len(center) == dim, f"needs {dim} components", "pose.center")
        try:
            Pose(center, rotation)
        except UsageError as err:
            raise ConfigError(str(err), "pose.rotation") from None
        pose = (tuple(float(c) for c in center), tuple(tuple(float(x) for x in r) for r in rotation))

    terms = []
    for i, t in enumerate(tree.get("phantom", [])):
        loc = f"phantom[{i}]"
        for key in ("kind", "center", "scale"):
            _need(key in t, f"missing {key!r}", loc)
        _need(t["kind"] in KINDS, f"kind must be one of {KINDS}", f"{loc}.kind")
        _need(dim is None or len(t["center"]) == dim, f"needs {dim} components", f"{loc}.center")
        _need(t["scale"] > 0, "must be positive", f"{loc}.scale")
        try:
            Term(t["kind"], t["center"], t["scale"], t.get("amplitude", 1.0), t.get("shape"))
        except UsageError as err:
            raise ConfigError(str(err), loc) from None
        terms.append((t["kind"], tuple(map(float, t["center"])), float(t["scale"]),
                      float(t.get("amplitude", 1.0)),
                      tuple(map(float, t["shape"])) if "shape" in t else None))
    if mode in ("forward", "roundtrip2d", "roundtrip3d"):
        _need(terms, f"mode {mode} needs at least one [[phantom]] term", "phantom")

    a = tree.get("acquisition", {})
    for key, lo in (("n_theta", 4), ("n_phi", 4), ("K", 8), ("m_theta", 8), ("m_phi", 4)):
        _count(a, key, "acquisition", lo)
    _need(a.get("noise", 0.0) >= 0.0, "must be non-negative", "acquisition.noise")
    if dim == 3 and mode in ("forward", "roundtrip3d"):
        _need("n_phi" in a, "3D acquisition needs n_phi", "acquisition.n_phi")
    acq = Acquisition(**{k: (float(v) if k == "noise" else v) for k, v in a.items()})

    r = dict(tree.get("reconstruction", {}))
    if "grid" in r:
        g = r["grid"] if isinstance(r["grid"], list) else [r["grid"]] * (dim or 1)
        _need(dim is None or len(g) == dim, f"needs {dim} sizes", "reconstruction.grid")
        _need(all(n >= 5 for n in g), "every size must be >= 5", "reconstruction.grid")
        r["grid"] = tuple(g)
    _count(r, "refine", "reconstruction")
    _need(r.get("a3_exponent", 2) in (2, 3), "must be 2 or 3", "reconstruction.a3_exponent")
    _need(0.0 <= r.get("margin", 0.05) < 1.0, "must lie in [0, 1)", "reconstruction.margin")
    if "margin" in r:
        r["margin"] = float(r["margin"])
    rec = Reconstruction(**r)

    v = dict(tree.get("validation", {}))
    for key, n in (("lemma31_axes", 2), ("lemma32_axes", 3)):
        if key in v:
            _need(len(v[key]) == n and all(x > 0 for x in v[key]),
                  f"needs {n} positive semi-axes", f"validation.{key}")
            v[key] = tuple(float(x) for x in v[key])
    _count(v, "lemma31_pairs", "validation")
    _count(v, "lemma32_pairs", "validation")
    _count(v, "lemma31_n", "validation", 2**14)
    if "eps" in v:
        eps = v["eps"]
        _need(len(eps) >= 3 and all(x > 0 for x in eps)
              and all(b < a for a, b in zip(eps, eps[1:])),
              "needs at least three positive, strictly decreasing values", "validation.eps")
        v["eps"] = tuple(float(x) for x in eps)
    for key in ("min_anorm", "pair_margin"):
        if key in v:
            v[key] = float(v[key])
    val = Validation(**v)

    tol = {k: float(x) for k, x in tree.get("tolerances", {}).items()}
    _need(0.0 <= tol.get("support_margin", 0.02) < 1.0, "must lie in [0, 1)",
          "tolerances.support_margin")

    inp = tree.get("input", {}).get("smt")
    if mode in ("invert2d", "invert3d"):
        _need(inp is not None, f"mode {mode} needs the data file", "input.smt")

    threads = tree.get("threads", 1)
    _need(threads >= 1, "must be >= 1", "threads")
    out = tree.get("output", {})
    return RunConfig(
        mode=mode, axes=axes, pose=pose, phantom=tuple(terms), acquisition=acq,
        reconstruction=rec, validation=val, tolerances=Tolerances(**tol),
        seed=tree.get("seed", 0), threads=threads, input=inp,
        output=out.get("dir", "out"), pgm=out.get("pgm", True),
    )


def load_config(path, mode=None):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}", str(path)) from None
    except UnicodeDecodeError:
        raise ConfigError("config is not UTF-8 text", str(path)) from None
    return parse_config(text, mode=mode)


# -- running -----------------------------------------------------------------


def _phantom(cfg, e):
    ph = Phantom(tuple(Term(*t) for t in cfg.phantom), dim=e.dim)
    if cfg.pose is not None:
        ph = ph.in_frame(Pose(*cfg.pose))
    margin = cfg.tolerances.support_margin
    for i, term in enumerate(ph.terms):
        if not support_check(Phantom((term,), dim=e.dim), e, margin):
            raise HypothesisError(
                f"phantom term {i} ({term.kind} at {list(map(float, term.center))}, scale "
                f"{term.scale}) is not supported in (1 - {margin}) E: the hypothesis "
                f"{HYPOTHESIS} is violated"
            )
    return ph


def _acquire(cfg, e, ph):
    a = cfg.acquisition
    bq = boundary_quadrature(e, a.n_theta, a.n_phi if e.dim == 3 else None)
    rg = RadialGrid.for_ellipsoid(e, a.K)
    data = sample_smt(ph, e, bq, rg, m_theta=a.m_theta, m_phi=a.m_phi, n_workers=cfg.threads)
    return add_noise(data, a.noise, cfg.seed)


def _finite(name, values):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values in {name}")


def _write_field(out, name, fld, pgm, manifest):
    _finite(name, fld.values)
    write_field_csv(out / f"{name}.csv", fld)
    manifest.append(f"{name}.csv")
    if not pgm:
        return
    scales = {}
    if fld.grid.dim == 2:
        pix, scales[name] = field_to_pgm(fld.values)
        write_pgm(out / f"{name}.pgm", pix)
        manifest.append(f"{name}.pgm")
    else:
        for k in range(fld.grid.shape[2]):
            stem = f"{name}_z{k:03d}"
            pix, scales[stem] = field_to_pgm(fld.values[:, :, k])
            write_pgm(out / f"{stem}.pgm", pix)
            manifest.append(f"{stem}.pgm")
    write_json(out / f"{name}_pgm.json", {"normalization": "min-max to 0..255", "scale": scales})
    manifest.append(f"{name}_pgm.json")


def _invert(cfg, data, out, manifest):
    e = data.ellipsoid
    r = cfg.reconstruction
    grid = Grid.covering(e, r.grid or ((81,) * 2 if e.dim == 2 else (33,) * 3))
    if e.dim == 2:
        f, u = invert2(data, grid, n_workers=cfg.threads, jacobian=r.jacobian, refine=r.refine,
                       return_potential=True)
    else:
        f, u = invert3(data, grid, n_workers=cfg.threads, jacobian=r.jacobian,
                       a3_exponent=r.a3_exponent, return_potential=True)
    _write_field(out, "potential", u, cfg.pgm, manifest)
    _write_field(out, "reconstruction", f, cfg.pgm, manifest)
    return f


def _metrics(cfg, f, ph, e, out, manifest):
    truth = ScalarField(f.grid, ph(f.grid.points()).reshape(f.grid.shape))
    _write_field(out, "truth", truth, cfg.pgm, manifest)
    m = error_metrics(f, ph, e, margin=cfg.reconstruction.margin).to_dict()
    m["margin"] = cfg.reconstruction.margin
    checks = {}
    if cfg.tolerances.rel_l2 is not None:
        checks["rel_l2"] = m["rel_l2"] <= cfg.tolerances.rel_l2
    if cfg.tolerances.rel_linf is not None:
        checks["rel_linf"] = m["rel_linf"] <= cfg.tolerances.rel_linf
    m["tolerances"] = {k: v for k, v in vars(cfg.tolerances).items() if v is not None}
    m["within_tolerance"] = checks
    _finite("metrics", [m["rel_l2"], m["rel_linf"]])
    write_json(out / "metrics.json", m)
    manifest.append("metrics.json")
    return m


def run(cfg, out=None):
    """Execute a parsed configuration; returns the list of files written."""
    out = Path(out if out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    if cfg.mode == "validate-lemmas":
        _validate(cfg, out, manifest)
        return manifest
    if cfg.mode in ("invert2d", "invert3d"):
        try:
            data = read_smt_csv(cfg.input)
        except OSError as err:
            raise ConfigError(f"cannot read data: {err.strerror}", "input.smt") from None
        except UsageError as err:
            raise ConfigError(str(err), "input.smt") from None
        want = 2 if cfg.mode == "invert2d" else 3
        if data.dim != want:
            raise ConfigError(f"data file is {data.dim}D but mode {cfg.mode} is {want}D", "input.smt")
        if cfg.axes is not None and tuple(cfg.axes) != data.ellipsoid.axes:
            raise ConfigError("semi-axes differ from those in the data file", "ellipsoid.axes")
        f = _invert(cfg, data, out, manifest)
        if cfg.phantom:
            _metrics(cfg, f, _phantom(cfg, data.ellipsoid), data.ellipsoid, out, manifest)
        return manifest
    e = Ellipsoid(cfg.axes)
    ph = _phantom(cfg, e)
    data = _acquire(cfg, e, ph)
    _finite("acquired data", data.g)
    write_smt_csv(out / "smt.csv", data)
    manifest.append("smt.csv")
    if cfg.mode == "forward":
        return manifest
    f = _invert(cfg, data, out, manifest)
    _metrics(cfg, f, ph, e, out, manifest)
    return manifest


def _validate(cfg, out, manifest):
    v = cfg.validation
    rng = np.random.default_rng(cfg.seed)
    e2 = Ellipsoid(v.lemma31_axes)
    pairs = random_interior_pairs(e2, v.lemma31_pairs, rng, margin=v.pair_margin,
                                  min_anorm=v.min_anorm)
    rep31 = lemma31_report(e2, pairs, n=v.lemma31_n)
    e3 = Ellipsoid(v.lemma32_axes)
    pairs = random_interior_pairs(e3, v.lemma32_pairs, rng, margin=v.pair_margin,
                                  min_anorm=v.min_anorm)
    rep32 = lemma32_report(e3, pairs, eps_list=v.eps)
    for stem, rep in (("lemma_log_kernel", rep31), ("lemma_delta_kernel", rep32)):
        _finite(stem, [r["deviation"] for r in rep.records])
        (out / f"{stem}.json").write_text(rep.to_json(), encoding="ascii")
        (out / f"{stem}.txt").write_text(rep.to_text(), encoding="ascii")
        manifest.extend([f"{stem}.json", f"{stem}.txt"])


def _say(stream, text):
    # messages contain non-ASCII symbols; do not depend on the locale
    buf = getattr(stream, "buffer", None)
    if buf is None:
        stream.write(text + "\n")
    else:
        stream.flush()
        buf.write((text + "\n").encode("utf-8"))
    stream.flush()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ellipsmt",
        description="Spherical means centred on an ellipse or ellipsoid: acquisition, "
                    "inversion and kernel-identity checks.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides [output].dir)")
    parser.add_argument("--threads", type=int, help="worker threads (overrides threads)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.mode)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("must be >= 1", "--threads")
            cfg = RunConfig(**{**vars(cfg), "threads": args.threads})
        files = run(cfg, args.out)
    except ConfigError as err:
        _say(sys.stderr, f"config error: {err}")
        return EXIT_CONFIG
    except HypothesisError as err:
        _say(sys.stderr, f"refused: {err}")
        return EXIT_HYPOTHESIS
    except NumericError as err:
        _say(sys.stderr, f"numeric failure: {err}")
        return EXIT_NUMERIC
    except UsageError as err:
        _say(sys.stderr, f"config error: {err}")
        return EXIT_CONFIG
    out = args.out or cfg.output
    for name in files:
        _say(sys.stdout, str(Path(out) / name))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
