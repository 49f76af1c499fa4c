"""Plain-text and image serialisation of acquisition data, fields and reports.

Every writer produces bytes that its reader maps back to an object the
writer turns into the same bytes: floats are printed with 17 significant
digits, which round-trips IEEE doubles exactly.
"""

import json
import os

import numpy as np

from .exceptions import UsageError
from .fields import Grid, ScalarField
from .forward import RadialGrid, SmtData
from .geometry import Ellipsoid, boundary_quadrature

__all__ = [
    "format_float",
    "write_smt_csv",
    "read_smt_csv",
    "smt_to_text",
    "smt_from_text",
    "write_field_csv",
    "read_field_csv",
    "field_to_text",
    "field_from_text",
    "write_pgm",
    "read_pgm",
    "field_to_pgm",
    "write_json",
    "read_json",
]

SMT_COLUMNS = "# dim, n_boundary, K, r_max, axes..."
FIELD_COLUMNS = "# dim, shape..., lower..., spacing..."


def format_float(v):
    return "%.17g" % float(v)


def _join(values):
    return ", ".join(format_float(v) for v in values)


def _floats(line, where):
    try:
        return [float(tok) for tok in line.split(",")]
    except ValueError as err:
        raise UsageError(f"{where}: malformed number ({err})") from None


def _header_values(lines, columns, where):
    if len(lines) < 2 or lines[0].strip() != columns or not lines[1].startswith("#"):
        raise UsageError(f"{where}: expected header {columns!r} followed by a values line")
    return _floats(lines[1][1:], f"{where} line 2")


def _write_text(path, text):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _read_text(path):
    with open(path, encoding="ascii") as fh:
        return fh.read()


# -- acquisition data --------------------------------------------------------


def smt_to_text(data):
    """CSV text: two header lines, then one row per boundary node.

    Each row holds the node's parameter angles (theta, or theta and phi)
    followed by the K+1 radial samples.
    """
    e = data.ellipsoid
    lines = [SMT_COLUMNS, "# " + ", ".join(
        [str(e.dim), str(data.bq.size), str(data.rg.K), format_float(data.rg.r_max)]
        + [format_float(a) for a in e.axes])]
    params = np.asarray(data.bq.params).reshape(data.bq.size, -1)
    for p, row in zip(params, data.g):
        lines.append(_join(np.concatenate([p, row])))
    return "\n".join(lines) + "\n"


def smt_from_text(text, where="<smt>"):
    """Inverse of :func:`smt_to_text`.

    The boundary rule is rebuilt from its sizes and checked against the
    stored angles, since weights are not part of the file.
    """
    lines = text.splitlines()
    head = _header_values(lines, SMT_COLUMNS, where)
    if len(head) < 4 or int(head[0]) not in (2, 3) or len(head) != 4 + int(head[0]):
        raise UsageError(f"{where}: header needs dim, n_boundary, K, r_max and dim axes")
    dim, n_boundary, K = (int(v) for v in head[:3])
    e = Ellipsoid(tuple(head[4:]))
    rg = RadialGrid(head[3], K)
    rows = [_floats(line, f"{where} line {i + 3}") for i, line in enumerate(lines[2:]) if line.strip()]
    n_param = dim - 1
    if len(rows) != n_boundary or any(len(r) != n_param + K + 1 for r in rows):
        raise UsageError(
            f"{where}: expected {n_boundary} rows of {n_param + K + 1} values"
        )
    table = np.array(rows).reshape(n_boundary, n_param + K + 1)
    params = table[:, :n_param]
    if dim == 2:
        bq = boundary_quadrature(e, n_boundary)
    else:
        n_theta = len(np.unique(params[:, 0]))
        if n_theta == 0 or n_boundary % n_theta:
            raise UsageError(f"{where}: boundary angles do not form a product grid")
        bq = boundary_quadrature(e, n_theta, n_boundary // n_theta)
    if not np.allclose(np.asarray(bq.params).reshape(n_boundary, -1), params, rtol=0.0, atol=1e-12):
        raise UsageError(f"{where}: boundary angles do not match the standard quadrature rule")
    return SmtData(e, bq, rg, table[:, n_param:])


def write_smt_csv(path, data):
    _write_text(path, smt_to_text(data))


def read_smt_csv(path):
    return smt_from_text(_read_text(path), where=os.fspath(path))


# -- fields ------------------------------------------------------------------


def field_to_text(field):
    """CSV text: header with the grid geometry, then the values.

    2D fields are written as one line per first index.  3D fields are
    written as blocks, one per index of the last axis, each introduced by a
    ``# slice k`` line.
    """
    g = field.grid
    lines = [FIELD_COLUMNS, "# " + ", ".join(
        [str(g.dim)] + [str(n) for n in g.shape]
        + [format_float(v) for v in g.lower] + [format_float(v) for v in g.spacing])]
    v = field.values
    if g.dim == 2:
        lines.extend(_join(row) for row in v)
    else:
        for k in range(g.shape[2]):
            lines.append(f"# slice {k}")
            lines.extend(_join(row) for row in v[:, :, k])
    return "\n".join(lines) + "\n"


def field_from_text(text, where="<field>"):
    lines = text.splitlines()
    head = _header_values(lines, FIELD_COLUMNS, where)
    dim = int(head[0]) if head else 0
    if dim not in (2, 3) or len(head) != 1 + 3 * dim:
        raise UsageError(f"{where}: header needs dim, shape, lower and spacing")
    shape = tuple(int(n) for n in head[1:1 + dim])
    grid = Grid(np.array(head[1 + dim:1 + 2 * dim]), np.array(head[1 + 2 * dim:]), shape)
    body = lines[2:]
    if dim == 2:
        rows = [_floats(line, f"{where} line {i + 3}") for i, line in enumerate(body)]
        values = _as_block(rows, shape, where)
    else:
        blocks, current = [], None
        for i, line in enumerate(body):
            if line.startswith("# slice"):
                current = []
                blocks.append(current)
            elif current is None:
                raise UsageError(f"{where} line {i + 3}: values before the first slice marker")
            else:
                current.append(_floats(line, f"{where} line {i + 3}"))
        if len(blocks) != shape[2]:
            raise UsageError(f"{where}: expected {shape[2]} slices, found {len(blocks)}")
        values = np.stack([_as_block(b, shape[:2], where) for b in blocks], axis=-1)
    return ScalarField(grid, values)


def _as_block(rows, shape, where):
    if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
        raise UsageError(f"{where}: expected a {shape[0]} x {shape[1]} block of values")
    return np.array(rows, dtype=float).reshape(shape)


def write_field_csv(path, field):
    _write_text(path, field_to_text(field))


def read_field_csv(path):
    return field_from_text(_read_text(path), where=os.fspath(path))


# -- images ------------------------------------------------------------------


def field_to_pgm(values):
    """Min-max normalise a 2D array to 8 bits; returns (pixels, scale dict).

    Rows of the image follow the second axis reversed, so ``x2`` points up
    and ``x1`` to the right.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise UsageError("PGM previews are 2D; pass one slice of a 3D field")
    lo, hi = float(np.min(v)), float(np.max(v))
    span = hi - lo
    if span > 0.0:
        pix = np.rint((v - lo) / span * 255.0)
    else:
        pix = np.zeros_like(v)
    pix = np.clip(pix, 0, 255).astype(np.uint8).T[::-1]
    return np.ascontiguousarray(pix), {"min": lo, "max": hi}


def write_pgm(path, pixels):
    """Binary (P5) 8-bit greyscale image."""
    pix = np.asarray(pixels)
    if pix.ndim != 2 or pix.dtype != np.uint8:
        raise UsageError("PGM pixels must be a 2D uint8 array")
    rows, cols = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise UsageError(f"{os.fspath(path)}: not an 8-bit P5 image")
    cols, rows = int(tokens[1]), int(tokens[2])
    pix = np.frombuffer(raw[pos + 1:], dtype=np.uint8)
    if pix.size != rows * cols:
        raise UsageError(f"{os.fspath(path)}: pixel count does not match {cols}x{rows}")
    return pix.reshape(rows, cols)


# -- JSON --------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, obj):
    text = json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    _write_text(path, text)


def read_json(path):
    return json.loads(_read_text(path))
