import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ellipsmt import (Ellipsoid, Grid, RadialGrid, ScalarField, UsageError, aniso_laplacian2,
                      backproject2, boundary_quadrature, error_metrics, invert2,
                      log_radial_integral, radial_spline, sample_smt)
from ellipsmt.recon2d import log_integral_table

from conftest import E2, PHANTOM2


# -- radial splines ----------------------------------------------------------


def test_spline_examples():
    rg = RadialGrid(2.0, 16)
    assert np.all(radial_spline(np.zeros(17), rg)(np.linspace(0, 2.5, 50)) == 0.0)
    lin = 0.3 + 1.7 * rg.nodes
    s = radial_spline(lin, rg)
    mids = rg.nodes[:-1] + 0.5 * rg.dr
    np.testing.assert_allclose(s(mids), 0.3 + 1.7 * mids, rtol=0, atol=1e-12)
    vals = np.random.default_rng(3).normal(size=17)
    np.testing.assert_allclose(radial_spline(vals, rg)(rg.nodes), vals, rtol=0, atol=1e-14)
    assert radial_spline(vals, rg)(2.01) == 0.0
    with pytest.raises(UsageError):
        radial_spline(np.zeros(16), rg)
    with pytest.raises(UsageError):
        radial_spline(vals, rg)(-0.1)


def test_spline_batch_and_pairs():
    rg = RadialGrid(2.0, 16)
    vals = np.random.default_rng(4).normal(size=(5, 17))
    s = radial_spline(vals, rg)
    x = np.linspace(0, 2.2, 9)
    full = s(x)
    assert full.shape == (5, 9)
    for j in range(5):
        np.testing.assert_allclose(full[j], radial_spline(vals[j], rg)(x), rtol=1e-15)
    pairs = np.random.default_rng(5).uniform(0, 2.2, (7, 5))
    got = s.at_pairs(pairs)
    for j in range(5):
        np.testing.assert_allclose(got[:, j], radial_spline(vals[j], rg)(pairs[:, j]), rtol=1e-15)


# -- radial log integral -----------------------------------------------------


def test_log_integral_examples():
    rg = RadialGrid(2.0, 32)
    assert log_radial_integral(radial_spline(np.zeros(33), rg), 0.7, rg) == 0.0
    one = radial_spline(np.ones(33), rg)
    # int_0^2 r log|r^2 - 1| dr from the antiderivative ((r^2-1) ln|r^2-1| - (r^2-1)) / 2
    exact = (3 * math.log(3) - 4) / 2
    assert exact == pytest.approx(-0.352082, abs=5e-7)
    assert log_radial_integral(one, 1.0, rg) == pytest.approx(exact, abs=1e-10)
    rg1 = RadialGrid(1.0, 16)
    ref = integrate.quad(lambda r: r * math.log(r * r), 0, 1, epsabs=1e-14)[0]
    assert ref == pytest.approx(-0.5, abs=1e-13)
    val = log_radial_integral(radial_spline(np.ones(17), rg1), 0.0, rg1)
    assert val == pytest.approx(-0.5, abs=1e-10)
    with pytest.raises(UsageError):
        log_radial_integral(one, 2.1, rg)
    with pytest.raises(UsageError):
        log_radial_integral(one, -0.1, rg)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_log_integral_against_adaptive_quadrature(seed, frac):
    rg = RadialGrid(2.0, 12)
    vals = np.random.default_rng(seed).normal(size=13)
    h = radial_spline(vals, rg)
    d = frac * rg.r_max
    f = lambda r: r * h(r) * (math.log(abs(r - d)) + math.log(r + d)) if r != d else 0.0
    pts = sorted(set(list(rg.nodes[1:-1]) + ([d] if 0 < d < 2 else [])))
    ref = integrate.quad(f, 0.0, 2.0, points=pts, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
    assert log_radial_integral(h, d, rg) == pytest.approx(ref, abs=1e-9 * (1 + np.abs(vals).max()))


def test_log_table_matches_direct(data2d):
    table = log_integral_table(data2d, 2.6, refine=2)
    d = np.random.default_rng(6).uniform(0, 2.6, 40)
    h = radial_spline(data2d.g, data2d.rg)
    direct = log_radial_integral(h, d, data2d.rg)
    scale = np.abs(direct).max()
    np.testing.assert_allclose(table(d), direct, rtol=0, atol=1e-6 * scale)


# -- grids and the Laplacian -------------------------------------------------


def test_covering_grid():
    g = Grid.covering(Ellipsoid((2, 1)), (11, 7))
    assert g.shape == (11, 7)
    np.testing.assert_allclose(g.axis(0)[[1, -2]], [-2, 2], atol=1e-15)
    np.testing.assert_allclose(g.axis(1)[[1, -2]], [-1, 1], atol=1e-15)
    with pytest.raises(UsageError):
        Grid.covering(Ellipsoid((2, 1)), 4)
    with pytest.raises(UsageError):
        Grid.covering(Ellipsoid((2, 1)), (9, 9, 9))


def _field(grid, fn):
    X = grid.points()
    return ScalarField(grid, fn(X).reshape(grid.shape))


def test_laplacian_examples():
    e = Ellipsoid((2, 1))
    g = Grid.covering(e, (9, 13))
    assert np.all(aniso_laplacian2(_field(g, lambda X: np.full(len(X), 3.0)), e).values == 0.0)
    np.testing.assert_allclose(aniso_laplacian2(_field(g, lambda X: X[:, 0] ** 2), e).values, 0.5,
                               rtol=0, atol=1e-10)
    np.testing.assert_allclose(aniso_laplacian2(_field(g, lambda X: X[:, 1] ** 2), e).values, 2.0,
                               rtol=0, atol=1e-10)
    lap = aniso_laplacian2(_field(g, lambda X: 1.5 - 2 * X[:, 0] + 0.25 * X[:, 1]), e)
    np.testing.assert_allclose(lap.values, 0.0, atol=1e-12)
    assert lap.grid.shape == (7, 11)
    with pytest.raises(UsageError):
        aniso_laplacian2(_field(Grid(np.zeros(2), np.ones(2), (4, 9)), lambda X: X[:, 0]), e)


# -- pipeline ----------------------------------------------------------------


def test_zero_data_gives_zero(data2d):
    zero = data2d.with_values(np.zeros_like(data2d.g))
    grid = Grid.covering(E2, 21)
    assert not np.any(backproject2(zero, grid).values)
    assert not np.any(invert2(zero, grid).values)


def test_potential_finite(data2d):
    u = backproject2(data2d, Grid.covering(E2, 41))
    assert np.all(np.isfinite(u.values))


def test_linearity_in_data(data2d):
    rng = np.random.default_rng(8)
    g2 = data2d.with_values(rng.normal(size=data2d.g.shape) * np.abs(data2d.g).max())
    grid = Grid.covering(E2, 21)
    a, b = 0.7, -1.9
    lhs = invert2(a * data2d + b * g2, grid).values
    rhs = a * invert2(data2d, grid).values + b * invert2(g2, grid).values
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * np.abs(rhs).max() * 100)


def test_reconstruction_and_jacobian(data2d):
    f = invert2(data2d, 81)
    good = error_metrics(f, PHANTOM2, E2, margin=0.05)
    assert good.rel_l2 <= 0.05 and good.rel_linf <= 0.10
    bare = invert2(data2d, 81, jacobian=False)
    np.testing.assert_allclose(bare.values * E2.det, f.values, rtol=1e-14, atol=1e-300)


def test_translation_commutes_with_reconstruction(data2d):
    grid = Grid.covering(E2, 41)
    shift = grid.spacing * np.array([3, -2])
    moved = PHANTOM2.translated(shift)
    data = sample_smt(moved, E2, data2d.bq, data2d.rg)
    f0 = invert2(data2d, grid).values
    f1 = invert2(data, grid).values
    # shifted reconstruction on the overlapping nodes
    a, b = f1[3:, :-2], f0[:-3, 2:]
    scale = np.abs(f0).max()
    assert np.max(np.abs(a - b)) <= 0.03 * scale


def test_grid_pair_mismatch(data2d, data3d):
    with pytest.raises(UsageError):
        backproject2(data3d, Grid.covering(E2, 9))
    with pytest.raises(UsageError):
        backproject2(data2d, Grid.covering(Ellipsoid((1, 1, 1)), 9))


def test_thread_count_does_not_change_output(data2d):
    grid = Grid.covering(E2, 31)
    base = invert2(data2d, grid).values
    for n in (2, 3):
        assert np.array_equal(invert2(data2d, grid, n_workers=n).values, base)


def test_boundary_quadrature_of_data_is_shared(data2d):
    assert data2d.bq.size == boundary_quadrature(E2, 256).size
