import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from ellipsmt import (Ellipsoid, Grid, LemmaReport, Phantom, ScalarField, UsageError, bump,
                      error_metrics, lemma31_constant, lemma32_check, mollifier,
                      reference_log_constant, richardson)
from ellipsmt.validation import auto_resolution, lemma31_report, plane_offset, random_interior_pairs

E2 = Ellipsoid((1.3, 0.8))


def test_reference_constant():
    # 2 int_{-pi}^{pi} log|sin(t/2)| dt = -4 pi log 2
    assert reference_log_constant() == pytest.approx(-4 * math.pi * math.log(2), rel=1e-12)


def test_log_constant_swap_symmetry():
    x, y = np.array([0.3, 0.1]), np.array([-0.2, 0.25])
    for n in (2**14, 2**16):
        assert lemma31_constant(E2, x, y, n) == pytest.approx(lemma31_constant(E2, y, x, n), abs=1e-13)


def test_log_constant_converges_in_n():
    x, y = np.array([0.3, 0.1]), np.array([-0.2, 0.25])
    c = [lemma31_constant(E2, x, y, 2**k) for k in range(14, 19)]
    assert abs(c[-1] - c[-2]) < abs(c[0] - c[1])
    assert abs(c[-1]) < 1e-4


def test_log_constant_on_node_singularities():
    # x and y mirror images across the minor axis: the zero set of |x-p|^2 - |y-p|^2
    # is the minor axis, which the trapezoid nodes hit exactly
    x, y = np.array([0.4, 0.1]), np.array([-0.4, 0.1])
    assert abs(lemma31_constant(E2, x, y, 2**16)) < 1e-12


def test_log_constant_usage_errors():
    with pytest.raises(UsageError):
        lemma31_constant(E2, (0.1, 0.1), (0.1, 0.1))
    with pytest.raises(UsageError):
        lemma31_constant(E2, (0.1, 0.1), (0.2, 0.1), n=1024)
    with pytest.raises(UsageError):
        lemma31_constant(Ellipsoid((1, 1, 1)), (0.1, 0.1, 0), (0.2, 0.1, 0))


def test_log_report_summary():
    pairs = random_interior_pairs(E2, 3, np.random.default_rng(1))
    rep = lemma31_report(E2, pairs, n=2**14)
    assert len(rep.records) == 3 and rep.summary["n"] == 2**14
    consts = [r["constant"] for r in rep.records]
    assert rep.summary["spread"] == pytest.approx(max(consts) - min(consts), abs=0)


@pytest.mark.parametrize("eps", [0.3, 0.05, 0.01])
def test_mollifier_mass(eps):
    mass, _ = integrate.quad(lambda s: mollifier(s, eps), -np.inf, np.inf, epsabs=1e-14)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_richardson_exact_on_quadratic_in_eps2():
    eps = [0.08, 0.04, 0.02]
    vals = [3.0 + 2.0 * e**2 - 7.0 * e**4 for e in eps]
    assert richardson(eps, vals) == pytest.approx(3.0, abs=1e-13)


def test_delta_identity_on_sphere():
    ball = Ellipsoid((1, 1, 1))
    rep = lemma32_check(ball, (0, 0, 0.3), (0, 0, -0.3))
    assert rep.summary["target"] == pytest.approx(math.pi / 0.6, rel=1e-15)
    assert abs(rep.summary["relative_deviation"]) < 1e-6


def test_delta_identity_deviation_decreases_along_eps():
    # band near the boundary: the mollifier tails leave a bias that shrinks with eps
    ball = Ellipsoid((1, 1, 1))
    rep = lemma32_check(ball, (0, 0, 0.9), (0, 0, 0.5), eps_list=(0.16, 0.08, 0.04, 0.02))
    devs = [abs(r["deviation"]) for r in rep.records]
    assert devs[0] > 1e-3
    for a, b in zip(devs, devs[1:]):
        assert b <= max(a, 1e-12)


def test_delta_identity_usage_errors():
    e = Ellipsoid((1, 2, 3))
    with pytest.raises(UsageError):
        lemma32_check(E2, (0, 0), (0.1, 0))
    with pytest.raises(UsageError):
        lemma32_check(e, (0, 0, 0), (0.1, 0, 0), eps_list=(0.08, 0.04))
    with pytest.raises(UsageError):
        lemma32_check(e, (0, 0, 0), (0.1, 0, 0), eps_list=(0.02, 0.04, 0.08))


def test_auto_resolution_scales_with_distance():
    e = Ellipsoid((1, 2, 3))
    small = auto_resolution(e, np.zeros(3), np.array([0.05, 0, 0]), 0.02)
    big = auto_resolution(e, np.zeros(3), np.array([0.0, 0.5, 0.5]), 0.02)
    assert small == (64, 64)
    assert big[0] > 64 and big[1] > 64


coord = st.floats(-1.0, 1.0)


@given(st.tuples(coord, coord, coord), st.tuples(coord, coord, coord))
def test_plane_offset_below_one(u, v):
    e = Ellipsoid((1, 2, 3))
    x, y = np.array(u) * e.a * 0.99 / np.sqrt(3), np.array(v) * e.a * 0.99 / np.sqrt(3)
    if np.array_equal(x, y):
        return
    assert plane_offset(e, x, y) < 1.0


@given(st.integers(0, 2**31))
def test_random_pairs_inside_and_separated(seed):
    e = Ellipsoid((1, 2, 3))
    for x, y in random_interior_pairs(e, 5, np.random.default_rng(seed)):
        assert np.sum((x / e.a) ** 2) <= 0.95**2 and np.sum((y / e.a) ** 2) <= 0.95**2
        assert np.linalg.norm(e.a * (x - y)) >= 0.1


def _recon(grid, fn):
    return ScalarField(grid, fn(grid.points()).reshape(grid.shape))


def test_error_metric_examples():
    truth = Phantom((bump((0.1, 0.0), 0.5),))
    g = Grid.covering(E2, 41)
    exact = _recon(g, truth)
    m = error_metrics(exact, truth, E2)
    assert m.rel_l2 == 0.0 and m.rel_linf == 0.0
    m = error_metrics(_recon(g, lambda X: 2.0 * truth(X)), truth, E2)
    assert m.rel_l2 == pytest.approx(1.0, rel=1e-15) and m.rel_linf == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(UsageError):
        error_metrics(exact, Phantom((), dim=2), E2)


def test_error_metrics_ignore_outside_mask():
    truth = Phantom((bump((0.1, 0.0), 0.5),))
    g = Grid.covering(E2, 41)
    outside = ~np.asarray(np.sum((g.points() / E2.a) ** 2, axis=1) <= 0.95**2)
    noisy = lambda X: truth(X) + 5.0 * outside
    assert error_metrics(_recon(g, noisy), truth, E2).rel_l2 == 0.0


def test_report_round_trip():
    rep = LemmaReport("x", [{"a": 1.5, "b": [1, 2]}], {"mean": np.float64(0.25), "n": np.int64(3)})
    back = LemmaReport.from_json(rep.to_json())
    assert back.to_dict() == {"name": "x", "records": [{"a": 1.5, "b": [1, 2]}],
                              "summary": {"mean": 0.25, "n": 3}}
    text = rep.to_text()
    assert "summary.mean: 0.25" in text and "record.0.b: [1, 2]" in text
