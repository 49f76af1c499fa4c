import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ellipsmt import Ellipsoid, Grid, RadialGrid, ScalarField, SmtData, UsageError, boundary_quadrature
from ellipsmt.io import (field_from_text, field_to_pgm, field_to_text, format_float, read_field_csv,
                         read_json, read_pgm, read_smt_csv, smt_from_text, smt_to_text,
                         write_field_csv, write_json, write_pgm, write_smt_csv)


def _smt(dim, rng):
    e = Ellipsoid((1.3, 0.8) if dim == 2 else (1.0, 1.2, 0.8))
    bq = boundary_quadrature(e, 8) if dim == 2 else boundary_quadrature(e, 8, 4)
    rg = RadialGrid.for_ellipsoid(e, 16)
    return SmtData(e, bq, rg, rng.normal(size=(bq.size, 17)))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


@pytest.mark.parametrize("dim", [2, 3])
def test_smt_round_trip(dim, rng, tmp_path):
    data = _smt(dim, rng)
    text = smt_to_text(data)
    back = smt_from_text(text)
    assert np.array_equal(back.g, data.g)
    assert back.ellipsoid.axes == data.ellipsoid.axes and back.rg.K == data.rg.K
    np.testing.assert_array_equal(back.bq.weights, data.bq.weights)
    assert smt_to_text(back) == text
    write_smt_csv(tmp_path / "d.csv", data)
    assert (tmp_path / "d.csv").read_text() == text
    assert np.array_equal(read_smt_csv(tmp_path / "d.csv").g, data.g)


def test_smt_header_example(rng):
    lines = smt_to_text(_smt(2, rng)).splitlines()
    assert lines[0].startswith("#") and lines[1] == "# 2, 8, 16, 2.6000000000000001, 1.3, 0.80000000000000004"
    assert len(lines) == 2 + 8 and len(lines[2].split(",")) == 1 + 17


def test_smt_rejects_damaged_files(rng):
    text = smt_to_text(_smt(2, rng))
    lines = text.splitlines()
    with pytest.raises(UsageError):
        smt_from_text("\n".join(lines[:-1]) + "\n")
    bad = lines[:2] + [lines[2].replace(lines[2].split(",")[0], "0.5", 1)] + lines[3:]
    with pytest.raises(UsageError):
        smt_from_text("\n".join(bad) + "\n")
    with pytest.raises(UsageError):
        smt_from_text("garbage\n")


@pytest.mark.parametrize("shape", [(7, 5), (5, 6, 4)])
def test_field_round_trip(shape, rng, tmp_path):
    grid = Grid(rng.normal(size=len(shape)), rng.uniform(0.1, 1.0, len(shape)), shape)
    fld = ScalarField(grid, rng.normal(size=shape))
    text = field_to_text(fld)
    back = field_from_text(text)
    assert back.grid.same_as(grid)
    assert np.array_equal(back.values, fld.values)
    assert field_to_text(back) == text
    write_field_csv(tmp_path / "f.csv", fld)
    assert np.array_equal(read_field_csv(tmp_path / "f.csv").values, fld.values)
    if len(shape) == 3:
        assert text.count("# slice") == shape[2]


def test_pgm_examples(tmp_path):
    v = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    pix, scale = field_to_pgm(v)
    assert scale == {"min": 0.0, "max": 5.0}
    # x1 to the right, x2 up
    assert pix.shape == (3, 2)
    assert pix[-1, 0] == 0 and pix[0, -1] == 255
    write_pgm(tmp_path / "a.pgm", pix)
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n2 3\n255\n") and len(raw) == len(b"P5\n2 3\n255\n") + 6
    assert np.array_equal(read_pgm(tmp_path / "a.pgm"), pix)
    flat, _ = field_to_pgm(np.full((4, 4), 2.0))
    assert not np.any(flat)
    with pytest.raises(UsageError):
        field_to_pgm(np.zeros((2, 2, 2)))
    with pytest.raises(UsageError):
        write_pgm(tmp_path / "b.pgm", np.zeros((2, 2)))


def test_json_is_sorted_and_strict(tmp_path):
    write_json(tmp_path / "m.json", {"b": np.float64(0.5), "a": [np.int64(1), 2]})
    text = (tmp_path / "m.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert read_json(tmp_path / "m.json") == {"a": [1, 2], "b": 0.5}
    assert json.loads(text) == read_json(tmp_path / "m.json")
    with pytest.raises(ValueError):
        write_json(tmp_path / "n.json", {"x": float("nan")})
